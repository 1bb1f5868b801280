#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "maxmin/formation.hpp"
#include "maxmin/joint.hpp"
#include "maxmin/topology.hpp"

namespace maxmin {

struct OpenLoopConfig {
  long long iters = 200000;
  double beta0 = 1.0;  // beta_k = beta0 / sqrt(k+1)
  /// Step along g/|g| instead of g; evens out the strongly time-skewed
  /// gradient magnitudes of the cumulative objective.
  bool normalized_steps = true;
  int trace_stride = 1000;

  void validate() const;
};

struct OpenLoopResult {
  /// Best plan found: plan[t][agent] is a feasible 2-D action.
  std::vector<std::vector<Eigen::Vector2d>> plan;
  /// Worst-agent cumulative cost of the plan, certified by re-simulating
  /// the environment step by step.
  double value = 0.0;
  double solver_value = 0.0;  // internal objective at the best iterate
  std::vector<double> trace;  // objective every trace_stride iterations
  bool diverged = false;
};

/// Centralized upper-bound oracle: minimizes the worst agent's cumulative
/// formation cost over all box-feasible open-loop action sequences, with
/// states eliminated through the deterministic dynamics. Projected
/// subgradient with best-iterate tracking.
OpenLoopResult optimal_openloop(const std::vector<Eigen::Vector2d>& initial,
                                const FormationSpec& spec, const TopologySchedule& schedule,
                                int horizon, const OpenLoopConfig& cfg = {});

/// Re-simulates a plan through the dynamics and returns per-agent
/// cumulative rewards (negated costs) plus instantaneous rewards per step.
struct PlanSimulation {
  std::vector<double> cumulative;                 // per agent
  std::vector<std::vector<double>> instantaneous; // [t][agent]
  double worst_cumulative_cost = 0.0;             // max_i of -cumulative[i]
};
PlanSimulation simulate_plan(const std::vector<std::vector<Eigen::Vector2d>>& plan,
                             const std::vector<Eigen::Vector2d>& initial,
                             const FormationSpec& spec, const TopologySchedule& schedule);

}  // namespace maxmin
