#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "maxmin/audit.hpp"
#include "maxmin/box.hpp"
#include "maxmin/rng.hpp"
#include "maxmin/topology.hpp"

namespace maxmin {

/// One agent's running estimate of the min-max optimizer and value.
struct AgentIterate {
  Eigen::VectorXd alpha;  // point estimate, lives in the joint feasible box
  double eta = 0.0;       // value estimate

  AgentIterate() = default;
  AgentIterate(Eigen::VectorXd a, double e) : alpha(std::move(a)), eta(e) {}
};

/// Convex local objective known only to its owning agent.
class LocalObjective {
 public:
  virtual ~LocalObjective() = default;
  virtual double value(const Eigen::VectorXd& alpha) const = 0;
  virtual Eigen::VectorXd subgradient(const Eigen::VectorXd& alpha) const = 0;
};

/// Diminishing step sizes beta_k = beta0 / (k+1)^exponent with
/// exponent in (0.5, 1], so that sum(beta) diverges and sum(beta^2) converges.
struct StepSchedule {
  double beta0 = 1.0;
  double exponent = 1.0;

  double at(long long k) const;
  void validate() const;
};

struct NoiseSpec {
  enum class Kind { Zero, Gaussian } kind = Kind::Zero;
  double sigma = 0.0;
};

struct OptimizerConfig {
  long long n_iters = 1000;       // K
  StepSchedule step;
  double r_scale = 2.0;           // r^i, must be > 1
  NoiseSpec noise;
  int n_agents_known = 0;         // N in the eta drift; 0 -> taken from topology
  std::uint64_t rng_seed = 0;
  bool record_trace = true;

  void validate() const;
};

/// Metropolis weight row for agent i: w_ij = 1/(1+max(deg_i,deg_j)) on
/// edges, remainder on self. Doubly stochastic on undirected graphs.
/// Entries align with topo.neighborhood(i).
Eigen::VectorXd metropolis_row(const Topology& topo, int i);

/// Convex combination of neighbor iterates with a validated weight row.
AgentIterate mix(const std::vector<AgentIterate>& neighbor_iterates,
                 const Eigen::VectorXd& weights_row);

/// One local update: eta drift, subgradient of max{0, f(alpha) - eta}, and
/// projection onto box x R.
AgentIterate minmax_step(int agent, const AgentIterate& mixed, long long k,
                         const LocalObjective& objective, const OptimizerConfig& cfg,
                         const Box& feasible, int n_agents, Rng* noise_rng);

struct TraceRow {
  long long round;
  int agent;
  double eta;
  double disagreement;       // max_i ||z_i - mean z|| at this round
  double objective_at_alpha; // f^i(alpha_i)
};

struct ConsensusRunResult {
  std::vector<AgentIterate> final_iterates;
  std::vector<TraceRow> trace;
  std::vector<double> disagreement_per_round;
  bool topology_connected_warning = false;
};

/// Runs K synchronous rounds of neighbor exchange + mix + step over the
/// (possibly round-varying) topology. All neighbor reads pass through the
/// message layer; non-neighbor reads are audited and fail hard.
ConsensusRunResult run_consensus_minmax(
    const TopologySchedule& network,
    const std::vector<const LocalObjective*>& objectives, const OptimizerConfig& cfg,
    const Box& feasible, std::vector<AgentIterate> init, AccessAudit* audit = nullptr);

void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path);

}  // namespace maxmin
