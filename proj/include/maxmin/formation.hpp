#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "maxmin/box.hpp"
#include "maxmin/joint.hpp"
#include "maxmin/model.hpp"
#include "maxmin/planner.hpp"
#include "maxmin/topology.hpp"

namespace maxmin {

/// Desired agent positions for the formation task.
struct FormationSpec {
  std::vector<Eigen::Vector2d> desired;
  /// When true, the pairwise cost counts ordered pairs (doubles every term).
  bool ordered_pairs = false;

  int n_agents() const { return static_cast<int>(desired.size()); }
};

/// Action coupling matrix of the single-integrator-like dynamics.
const Eigen::Matrix2d& dynamics_matrix();

/// One transition of a single agent: s' = s + B a, a in [0,1]^2.
Eigen::Vector2d step_dynamics(const Eigen::Vector2d& s, const Eigen::Vector2d& a);

/// Negated sum of relative-position errors over the pairs inside agent i's
/// neighborhood. Zero exactly when the desired relative layout is met
/// (any rigid translation); always <= 0.
double local_reward(const std::vector<Eigen::Vector2d>& slice, const FormationSpec& spec,
                    const Topology& topo, int agent);

/// Pair cost over an explicit member set; slice[k] is members[k]'s position.
double pair_reward(const std::vector<Eigen::Vector2d>& slice, const std::vector<int>& members,
                   const FormationSpec& spec);

struct RolloutConfig {
  double euler_dt = 0.05;
  double total_time = 50.0;
  double convergence_tol = 1e-6;
  int lookahead_iters = 200;

  void validate() const;
};

struct ConvergedFlow {
  std::vector<Eigen::Vector2d> positions;
  bool converged = false;
  double elapsed_time = 0.0;
  double centroid_drift_rate = 0.0;  // |centroid(end) - centroid(start)| / elapsed
};

/// Euler-integrates the displacement consensus flow
///   ds_i/dt = -sum_{j ~ i} (s_i - s_j) - (d_i - d_j)
/// over the local graph until the per-step displacement drops below the
/// tolerance or total_time elapses. `desired[k]` pairs with `initial[k]`.
ConvergedFlow rollout_converge(const std::vector<Eigen::Vector2d>& initial,
                               const std::vector<Eigen::Vector2d>& desired,
                               const Topology& local_graph, const RolloutConfig& cfg);

/// One-step lookahead: feasible action minimizing |s + B a - target|,
/// solved by projected gradient on the box.
Eigen::Vector2d lookahead_action(const Eigen::Vector2d& s, const Eigen::Vector2d& target,
                                 int max_iters = 200, double tol = 1e-8);

/// Slice-indexed form: the action for slot `idx` of the slice.
Eigen::Vector2d rollout_action(const std::vector<Eigen::Vector2d>& current,
                               const std::vector<Eigen::Vector2d>& converged, int idx,
                               const RolloutConfig& cfg);

/// Neighborhood generative model for one agent: per-member dynamics plus the
/// local pair reward, evaluated at the post-transition slice.
std::unique_ptr<GenerativeModel> make_local_formation_model(const Topology& topo,
                                                            const FormationSpec& spec,
                                                            int agent, double discount,
                                                            int horizon);

/// Default policy for tree leaves: integrate the consensus flow over a fully
/// connected local graph, then step every member toward its converged state.
std::unique_ptr<RolloutPolicy> make_formation_rollout(const Topology& topo,
                                                      const FormationSpec& spec, int agent,
                                                      const RolloutConfig& cfg);

/// Convenience: positions as a JointState <-> Vector2d conversions.
std::vector<Eigen::Vector2d> to_positions(const std::vector<Eigen::VectorXd>& per_agent);
std::vector<Eigen::VectorXd> from_positions(const std::vector<Eigen::Vector2d>& pos);

}  // namespace maxmin
