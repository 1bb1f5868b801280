#pragma once

#include <string>

#include "maxmin/environment.hpp"
#include "maxmin/formation.hpp"

namespace maxmin {

/// The formation-control Markov game as a harness environment.
class FormationEnvironment final : public Environment {
 public:
  FormationEnvironment(FormationSpec spec, std::vector<Eigen::Vector2d> initial,
                       RolloutConfig rollout_cfg);

  int n_agents() const override { return spec_.n_agents(); }
  int state_dim(int) const override { return 2; }
  int action_dim(int) const override { return 2; }
  Box action_box(int) const override { return Box::unit(2); }
  JointState initial_state() const override;

  std::unique_ptr<GenerativeModel> local_model(const Topology& topo, int agent,
                                               double discount, int horizon) const override;
  std::unique_ptr<RolloutPolicy> local_rollout(const Topology& topo,
                                               int agent) const override;

  std::pair<JointState, std::vector<double>> step(const JointState& state,
                                                  const JointAction& action,
                                                  const Topology& topo) const override;

  JointAction baseline_rollout_actions(const JointState& state,
                                       const Topology& topo) const override;

  std::vector<JointAction> optimal_plan(const TopologySchedule& schedule,
                                        int horizon) const override;

  const FormationSpec& spec() const { return spec_; }
  const RolloutConfig& rollout_cfg() const { return rollout_cfg_; }
  const std::vector<Eigen::Vector2d>& initial_positions() const { return initial_; }

 private:
  FormationSpec spec_;
  std::vector<Eigen::Vector2d> initial_;
  RolloutConfig rollout_cfg_;
};

/// Built-in experiment pieces, addressable by name from config files.
/// Topologies: "G1" (5 agents, near-complete), "G2" (5-cycle), "G3" (8-path).
Topology builtin_topology(const std::string& name);

/// Schedules: the three fixed graphs plus "switching" (G1/G2 every 10 steps).
TopologySchedule builtin_schedule(const std::string& name, int switch_period = 10);

/// Formations: "pentagon" (5 agents) and "octagon" (8 agents).
FormationSpec builtin_formation(const std::string& name);

/// Scattered start positions matched to the built-in formations.
std::vector<Eigen::Vector2d> builtin_initial_positions(int n_agents);

}  // namespace maxmin
