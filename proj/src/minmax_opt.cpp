#include "maxmin/minmax_opt.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace maxmin {

double StepSchedule::at(long long k) const {
  return beta0 / std::pow(static_cast<double>(k + 1), exponent);
}

void StepSchedule::validate() const {
  if (beta0 <= 0.0) throw std::invalid_argument("StepSchedule: beta0 must be positive");
  if (!(exponent > 0.5 && exponent <= 1.0))
    throw std::invalid_argument("StepSchedule: exponent must lie in (0.5, 1]");
}

void OptimizerConfig::validate() const {
  if (n_iters < 0) throw std::invalid_argument("OptimizerConfig: n_iters must be >= 0");
  step.validate();
  if (!(r_scale > 1.0)) throw std::invalid_argument("OptimizerConfig: r_scale must be > 1");
  if (noise.kind == NoiseSpec::Kind::Gaussian && noise.sigma < 0.0)
    throw std::invalid_argument("OptimizerConfig: noise sigma must be >= 0");
}

Eigen::VectorXd metropolis_row(const Topology& topo, int i) {
  const auto& hood = topo.neighborhood(i);
  Eigen::VectorXd row(hood.size());
  double off_diag = 0.0;
  int self_pos = -1;
  for (std::size_t k = 0; k < hood.size(); ++k) {
    const int j = hood[k];
    if (j == i) {
      self_pos = static_cast<int>(k);
      continue;
    }
    row[k] = 1.0 / (1.0 + std::max(topo.degree(i), topo.degree(j)));
    off_diag += row[k];
  }
  row[self_pos] = 1.0 - off_diag;
  return row;
}

AgentIterate mix(const std::vector<AgentIterate>& neighbor_iterates,
                 const Eigen::VectorXd& weights_row) {
  if (neighbor_iterates.empty())
    throw std::invalid_argument("mix: empty neighborhood");
  if (weights_row.size() != static_cast<Eigen::Index>(neighbor_iterates.size()))
    throw std::invalid_argument("mix: weights row size mismatch");
  double sum = 0.0;
  for (Eigen::Index k = 0; k < weights_row.size(); ++k) {
    if (weights_row[k] < -1e-15)
      throw std::invalid_argument("mix: negative consensus weight");
    sum += weights_row[k];
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("mix: consensus weights must sum to 1");

  AgentIterate out(Eigen::VectorXd::Zero(neighbor_iterates.front().alpha.size()), 0.0);
  for (std::size_t k = 0; k < neighbor_iterates.size(); ++k) {
    out.alpha += weights_row[k] * neighbor_iterates[k].alpha;
    out.eta += weights_row[k] * neighbor_iterates[k].eta;
  }
  return out;
}

AgentIterate minmax_step(int agent, const AgentIterate& mixed, long long k,
                         const LocalObjective& objective, const OptimizerConfig& cfg,
                         const Box& feasible, int n_agents, Rng* noise_rng) {
  const double beta = cfg.step.at(k);

  // eta drift, then subgradient of max{0, f(alpha) - eta} at the drifted point
  AgentIterate v = mixed;
  v.eta -= beta / static_cast<double>(n_agents);

  Eigen::VectorXd g_alpha = Eigen::VectorXd::Zero(v.alpha.size());
  double g_eta = 0.0;
  const double slack = objective.value(v.alpha) - v.eta;
  if (slack > 0.0) {
    g_alpha = objective.subgradient(v.alpha);
    g_eta = -1.0;
  }
  if (cfg.noise.kind == NoiseSpec::Kind::Gaussian && cfg.noise.sigma > 0.0) {
    if (!noise_rng) throw std::invalid_argument("minmax_step: gaussian noise requires an rng");
    std::normal_distribution<double> gauss(0.0, cfg.noise.sigma);
    for (Eigen::Index d = 0; d < g_alpha.size(); ++d) g_alpha[d] += gauss(*noise_rng);
  }

  AgentIterate next;
  next.alpha = feasible.clip(v.alpha - beta * cfg.r_scale * g_alpha);
  next.eta = v.eta - beta * cfg.r_scale * g_eta;
  (void)agent;
  return next;
}

namespace {

/// Double-buffered synchronous message board. Reads are restricted to the
/// current round's neighbors and logged with the audit.
class NeighborExchange {
 public:
  NeighborExchange(int n_agents, AccessAudit* audit)
      : n_agents_(n_agents), audit_(audit), current_(n_agents), next_(n_agents) {}

  void post_initial(std::vector<AgentIterate> all) { current_ = std::move(all); }

  const AgentIterate& read(const Topology& topo, int reader, int owner, long long round) {
    bool allowed = true;
    if (audit_) {
      allowed = audit_->record(topo, reader, owner, "iterate", round);
    } else {
      allowed = reader == owner || topo.has_edge(reader, owner);
    }
    if (!allowed)
      throw std::logic_error("message layer: non-neighbor iterate read (agent " +
                             std::to_string(reader) + " <- " + std::to_string(owner) + ")");
    return current_[owner];
  }

  void post(int agent, AgentIterate z) { next_[agent] = std::move(z); }

  void advance() { std::swap(current_, next_); }

  const std::vector<AgentIterate>& snapshot() const { return current_; }

 private:
  int n_agents_;
  AccessAudit* audit_;
  std::vector<AgentIterate> current_, next_;
};

double max_disagreement(const std::vector<AgentIterate>& zs) {
  const int n = static_cast<int>(zs.size());
  Eigen::VectorXd mean_alpha = Eigen::VectorXd::Zero(zs.front().alpha.size());
  double mean_eta = 0.0;
  for (const auto& z : zs) {
    mean_alpha += z.alpha;
    mean_eta += z.eta;
  }
  mean_alpha /= n;
  mean_eta /= n;
  double worst = 0.0;
  for (const auto& z : zs) {
    const double d = std::sqrt((z.alpha - mean_alpha).squaredNorm() +
                               (z.eta - mean_eta) * (z.eta - mean_eta));
    worst = std::max(worst, d);
  }
  return worst;
}

}  // namespace

ConsensusRunResult run_consensus_minmax(
    const TopologySchedule& network,
    const std::vector<const LocalObjective*>& objectives, const OptimizerConfig& cfg,
    const Box& feasible, std::vector<AgentIterate> init, AccessAudit* audit) {
  cfg.validate();
  const int n = network.n_agents();
  if (static_cast<int>(objectives.size()) != n)
    throw std::invalid_argument("run_consensus_minmax: one objective per agent required");
  if (static_cast<int>(init.size()) != n)
    throw std::invalid_argument("run_consensus_minmax: one init iterate per agent required");
  for (const auto& z : init)
    if (!feasible.contains(z.alpha, 1e-12))
      throw std::invalid_argument("run_consensus_minmax: init alpha outside feasible box");

  ConsensusRunResult result;
  result.topology_connected_warning = false;
  for (const auto& e : network.entries())
    if (!e.topology.connected()) result.topology_connected_warning = true;

  const int n_known = cfg.n_agents_known > 0 ? cfg.n_agents_known : n;

  std::vector<Rng> noise_rngs;
  noise_rngs.reserve(n);
  for (int i = 0; i < n; ++i) noise_rngs.emplace_back(mix64(cfg.rng_seed + 0x517cc1b7ULL * (i + 1)));

  NeighborExchange exchange(n, audit);
  exchange.post_initial(std::move(init));

  for (long long k = 0; k < cfg.n_iters; ++k) {
    const Topology& topo = network.at(k);
    for (int i = 0; i < n; ++i) {
      const auto& hood = topo.neighborhood(i);
      std::vector<AgentIterate> neighbor_zs;
      neighbor_zs.reserve(hood.size());
      for (int j : hood) neighbor_zs.push_back(exchange.read(topo, i, j, k));
      AgentIterate mixed = mix(neighbor_zs, metropolis_row(topo, i));
      AgentIterate next = minmax_step(i, mixed, k, *objectives[i], cfg, feasible, n_known,
                                      &noise_rngs[i]);
      if (!feasible.contains(next.alpha, 1e-12))
        throw std::logic_error("run_consensus_minmax: post-projection iterate left the box");
      exchange.post(i, std::move(next));
    }
    exchange.advance();

    const double dis = max_disagreement(exchange.snapshot());
    result.disagreement_per_round.push_back(dis);
    if (cfg.record_trace) {
      for (int i = 0; i < n; ++i) {
        const auto& z = exchange.snapshot()[i];
        result.trace.push_back(TraceRow{k, i, z.eta, dis, objectives[i]->value(z.alpha)});
      }
    }
  }

  result.final_iterates = exchange.snapshot();
  return result;
}

void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path);
  out << "# consensus_trace_csv v1\n";
  out << "round,agent,eta,disagreement,objective_value_at_own_alpha\n";
  char buf[160];
  for (const auto& row : trace) {
    std::snprintf(buf, sizeof(buf), "%lld,%d,%.17g,%.17g,%.17g\n", row.round, row.agent + 1,
                  row.eta, row.disagreement, row.objective_at_alpha);
    out << buf;
  }
}

}  // namespace maxmin
