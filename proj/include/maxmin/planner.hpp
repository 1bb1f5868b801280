#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "maxmin/model.hpp"
#include "maxmin/rng.hpp"

namespace maxmin {

struct PlannerConfig {
  int n_queries = 100;       // tree queries per plan call
  int max_depth = 5;         // search depth
  double ucb_c = 1.0;        // exploration constant
  double k_action = 2.0;     // action progressive widening k
  double alpha_action = 0.5; // action progressive widening exponent
  double k_outcome = 0.0;    // outcome widening k (stochastic models)
  double alpha_outcome = 0.5;
  std::uint64_t rng_seed = 0;
  bool record_trajectories = false;

  void validate() const;
};

/// Sampled first-level action with its running mean return estimate.
struct QSample {
  Eigen::VectorXd action;
  double value = 0.0;
};

/// Default policy supplying leaf return estimates: simulates `steps`
/// transitions from `state` and returns the discounted reward sum.
/// Implementations must be deterministic given the rng state.
class RolloutPolicy {
 public:
  virtual ~RolloutPolicy() = default;
  virtual double estimate_return(const Eigen::VectorXd& state, int steps,
                                 const GenerativeModel& model, Rng& rng) const = 0;
};

class PlannerError : public std::runtime_error {
 public:
  explicit PlannerError(const std::string& what) : std::runtime_error(what) {}
};

struct Outcome {
  Eigen::VectorXd state;
  double reward = 0.0;
  int node = -1;
  int count = 0;
};

struct ActionEdge {
  Eigen::VectorXd action;
  int visits = 0;
  double q_mean = 0.0;  // arithmetic mean of returns through this edge
  std::vector<Outcome> outcomes;
};

struct TreeNode {
  int depth = 0;
  int visits = 0;
  std::vector<ActionEdge> edges;
};

struct TrajectoryStep {
  int node = -1;
  int edge = -1;
  double reward = 0.0;
};

struct QueryTrace {
  std::vector<TrajectoryStep> steps;  // root to leaf
  double leaf_estimate = 0.0;         // rollout value below the last step
  bool leaf_is_rollout = false;
};

/// True when the node should sample a fresh action instead of descending.
/// The first child is always forced so every node is expandable.
bool should_widen(int child_count, int node_visits, double k, double alpha);

/// UCB1 argmax over action children; ties break to the lowest index.
int ucb1_select(const TreeNode& node, double ucb_c);

/// Pluggable child-selection rule; UCB1 is the default and the only one
/// shipped, but alternatives can be swapped in without touching the tree.
class SelectionRule {
 public:
  virtual ~SelectionRule() = default;
  virtual int select(const TreeNode& node, double exploration_c) const {
    return ucb1_select(node, exploration_c);
  }
};

/// Monte Carlo search tree over one agent's neighborhood sub-game, with
/// double progressive widening. Nodes are pooled by (depth, state), so
/// deterministic models revisit shared states instead of duplicating them.
class SearchTree {
 public:
  SearchTree(const GenerativeModel& model, const RolloutPolicy& rollout, PlannerConfig cfg,
             const SelectionRule* selection = nullptr);

  void set_root(const Eigen::VectorXd& root_state);
  void run_queries(int count);

  std::vector<QSample> root_samples() const;

  int root_id() const { return root_id_; }
  int n_nodes() const { return static_cast<int>(nodes_.size()); }
  const TreeNode& node(int id) const { return nodes_.at(id); }
  const std::vector<QueryTrace>& traces() const { return traces_; }

  /// Asserts the action widening bound at every node; throws on violation.
  void check_widening_bound() const;

 private:
  int lookup_or_create(int depth, const Eigen::VectorXd& state);
  double simulate(int node_id, const Eigen::VectorXd& state, int remaining, QueryTrace* trace);

  const GenerativeModel& model_;
  const RolloutPolicy& rollout_;
  SelectionRule default_rule_;
  const SelectionRule* selection_;
  PlannerConfig cfg_;
  Rng rng_;
  std::vector<TreeNode> nodes_;
  std::unordered_map<std::string, int> index_;  // (depth, state bits) -> node id
  int root_id_ = -1;
  Eigen::VectorXd root_state_;
  std::vector<QueryTrace> traces_;
  std::unordered_map<int, double> tail_cache_;  // boundary estimates, deterministic models
  long long query_counter_ = 0;
};

/// Runs cfg.n_queries tree queries from the root and returns one QSample per
/// distinct first-level action child.
std::vector<QSample> plan(const Eigen::VectorXd& root, const GenerativeModel& model,
                          const RolloutPolicy& rollout, const PlannerConfig& cfg);

/// One line per query: `q=<i> steps=(node,edge,reward)|... leaf=<v> rollout=<0|1>`.
std::string format_trajectory_log(const SearchTree& tree);

}  // namespace maxmin
