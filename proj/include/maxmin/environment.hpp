#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "maxmin/box.hpp"
#include "maxmin/joint.hpp"
#include "maxmin/model.hpp"
#include "maxmin/planner.hpp"
#include "maxmin/topology.hpp"

namespace maxmin {

/// A networked Markov game the harness can run: factored state, per-agent
/// feasible boxes, neighborhood generative models for planning, and the
/// true transition. Rewards are evaluated on the post-transition state.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual int n_agents() const = 0;
  virtual int state_dim(int agent) const = 0;
  virtual int action_dim(int agent) const = 0;
  virtual Box action_box(int agent) const = 0;
  virtual JointState initial_state() const = 0;

  virtual std::unique_ptr<GenerativeModel> local_model(const Topology& topo, int agent,
                                                       double discount,
                                                       int horizon) const = 0;
  virtual std::unique_ptr<RolloutPolicy> local_rollout(const Topology& topo,
                                                       int agent) const = 0;

  /// Advances every agent and returns (next state, per-agent rewards).
  virtual std::pair<JointState, std::vector<double>> step(const JointState& state,
                                                          const JointAction& action,
                                                          const Topology& topo) const = 0;

  /// Joint action of the default-policy baseline on the true topology.
  virtual JointAction baseline_rollout_actions(const JointState& state,
                                               const Topology& topo) const = 0;

  /// Open-loop optimal plan (only environments with a tractable oracle).
  virtual std::vector<JointAction> optimal_plan(const TopologySchedule& schedule,
                                                int horizon) const;
};

}  // namespace maxmin
