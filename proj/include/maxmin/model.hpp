#pragma once

#include <Eigen/Dense>
#include <utility>

#include "maxmin/box.hpp"
#include "maxmin/rng.hpp"

namespace maxmin {

/// Generative model of one agent's neighborhood sub-game.
///
/// States and actions are the flattened neighborhood slices (ascending agent
/// order). The contract is that reward and next-state depend only on these
/// slices; nothing outside the neighborhood enters. Implementations must be
/// safe for concurrent sampling given independent Rng instances.
class GenerativeModel {
 public:
  virtual ~GenerativeModel() = default;

  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;

  /// Feasible set for the flattened neighborhood action.
  virtual const Box& action_box() const = 0;

  /// Proposal for new tree actions. Defaults to uniform over the box;
  /// finite-action models override to sample their support.
  virtual Eigen::VectorXd sample_action(Rng& rng) const { return action_box().sample(rng); }

  /// One transition: (next neighborhood state, local reward).
  virtual std::pair<Eigen::VectorXd, double> step(const Eigen::VectorXd& state,
                                                  const Eigen::VectorXd& action,
                                                  Rng& rng) const = 0;

  virtual double discount() const = 0;
  virtual int horizon() const = 0;

  /// True if transitions carry no randomness; the planner then keeps a
  /// single outcome child per action.
  virtual bool deterministic() const = 0;
};

}  // namespace maxmin
