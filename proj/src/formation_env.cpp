#include "maxmin/formation_env.hpp"

#include <cmath>
#include <stdexcept>

#include "maxmin/openloop.hpp"

namespace maxmin {

FormationEnvironment::FormationEnvironment(FormationSpec spec,
                                           std::vector<Eigen::Vector2d> initial,
                                           RolloutConfig rollout_cfg)
    : spec_(std::move(spec)), initial_(std::move(initial)), rollout_cfg_(rollout_cfg) {
  if (spec_.n_agents() != static_cast<int>(initial_.size()))
    throw std::invalid_argument("FormationEnvironment: spec/initial size mismatch");
  rollout_cfg_.validate();
}

JointState FormationEnvironment::initial_state() const {
  return JointState{from_positions(initial_)};
}

std::unique_ptr<GenerativeModel> FormationEnvironment::local_model(const Topology& topo,
                                                                   int agent, double discount,
                                                                   int horizon) const {
  return make_local_formation_model(topo, spec_, agent, discount, horizon);
}

std::unique_ptr<RolloutPolicy> FormationEnvironment::local_rollout(const Topology& topo,
                                                                   int agent) const {
  return make_formation_rollout(topo, spec_, agent, rollout_cfg_);
}

std::pair<JointState, std::vector<double>> FormationEnvironment::step(
    const JointState& state, const JointAction& action, const Topology& topo) const {
  const int n = n_agents();
  if (state.n_agents() != n || action.n_agents() != n)
    throw std::invalid_argument("FormationEnvironment::step: size mismatch");
  auto pos = to_positions(state.per_agent);
  for (int i = 0; i < n; ++i)
    pos[i] = step_dynamics(pos[i], Eigen::Vector2d(action.per_agent[i]));
  std::vector<double> rewards(n);
  for (int i = 0; i < n; ++i) {
    std::vector<Eigen::Vector2d> slice;
    for (int m : topo.neighborhood(i)) slice.push_back(pos[m]);
    rewards[i] = local_reward(slice, spec_, topo, i);
  }
  return {JointState{from_positions(pos)}, std::move(rewards)};
}

JointAction FormationEnvironment::baseline_rollout_actions(const JointState& state,
                                                           const Topology& topo) const {
  auto pos = to_positions(state.per_agent);
  const ConvergedFlow flow = rollout_converge(pos, spec_.desired, topo, rollout_cfg_);
  JointAction action;
  action.per_agent.resize(pos.size());
  for (int i = 0; i < static_cast<int>(pos.size()); ++i)
    action.per_agent[i] = rollout_action(pos, flow.positions, i, rollout_cfg_);
  return action;
}

std::vector<JointAction> FormationEnvironment::optimal_plan(const TopologySchedule& schedule,
                                                            int horizon) const {
  OpenLoopConfig cfg;
  const OpenLoopResult result = optimal_openloop(initial_, spec_, schedule, horizon, cfg);
  std::vector<JointAction> plan;
  plan.reserve(result.plan.size());
  for (const auto& step_actions : result.plan) {
    JointAction a;
    for (const auto& ai : step_actions) a.per_agent.push_back(ai);
    plan.push_back(std::move(a));
  }
  return plan;
}

Topology builtin_topology(const std::string& name) {
  // edges below use 1-based agent labels, converted at this boundary
  auto build = [](int n, std::vector<std::pair<int, int>> edges1) {
    for (auto& e : edges1) {
      e.first -= 1;
      e.second -= 1;
    }
    return Topology(n, edges1);
  };
  if (name == "G1") {
    // five agents, complete except the 1-5 link
    return build(5, {{1, 2}, {1, 3}, {1, 4}, {2, 3}, {2, 4}, {2, 5}, {3, 4}, {3, 5}, {4, 5}});
  }
  if (name == "G2") {
    return build(5, {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 1}});
  }
  if (name == "G3") {
    return build(8, {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {7, 8}});
  }
  throw std::invalid_argument("builtin_topology: unknown name '" + name + "'");
}

TopologySchedule builtin_schedule(const std::string& name, int switch_period) {
  if (name == "G1" || name == "G2" || name == "G3")
    return TopologySchedule(builtin_topology(name));
  if (name == "switching") {
    std::vector<TopologySchedule::Entry> entries;
    entries.push_back({builtin_topology("G1"), switch_period});
    entries.push_back({builtin_topology("G2"), switch_period});
    return TopologySchedule(std::move(entries), /*cyclic=*/true);
  }
  throw std::invalid_argument("builtin_schedule: unknown name '" + name + "'");
}

FormationSpec builtin_formation(const std::string& name) {
  FormationSpec spec;
  int n;
  double radius;
  if (name == "pentagon") {
    n = 5;
    radius = 1.5;
  } else if (name == "octagon") {
    n = 8;
    radius = 2.0;
  } else {
    throw std::invalid_argument("builtin_formation: unknown name '" + name + "'");
  }
  const double pi = std::acos(-1.0);
  for (int k = 0; k < n; ++k) {
    const double angle = pi / 2.0 + 2.0 * pi * k / n;
    spec.desired.emplace_back(radius * std::cos(angle), radius * std::sin(angle));
  }
  return spec;
}

std::vector<Eigen::Vector2d> builtin_initial_positions(int n_agents) {
  // the matching formation displaced by mixed unit-scale offsets; the -y
  // offsets exercise the coupled (move-down drags right) direction of B
  if (n_agents != 5 && n_agents != 8)
    throw std::invalid_argument("builtin_initial_positions: no fixture for n_agents=" +
                                std::to_string(n_agents));
  const FormationSpec spec = builtin_formation(n_agents == 5 ? "pentagon" : "octagon");
  std::vector<Eigen::Vector2d> out;
  for (int i = 0; i < n_agents; ++i) {
    const double dy = (i % 2 == 0) ? 1.0 : -0.5;
    const double dx = (i % 3 == 0) ? -0.4 : 0.0;
    out.push_back(spec.desired[i] + Eigen::Vector2d(dx, dy));
  }
  return out;
}

}  // namespace maxmin
