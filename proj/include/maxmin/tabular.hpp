#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "maxmin/model.hpp"
#include "maxmin/planner.hpp"

namespace maxmin {

/// Finite deterministic multi-agent game with per-agent reward tables.
/// Joint actions are encoded in mixed radix, agent 0 least significant.
struct TabularGame {
  int n_agents = 0;
  std::vector<int> states;                        // labels
  std::vector<std::vector<int>> actions;          // per agent, labels
  std::vector<std::vector<int>> transition;       // [s_idx][joint_idx] -> s_idx
  std::vector<std::vector<std::vector<double>>> rewards;  // [agent][s_idx][joint_idx]
  int horizon = 1;
  double discount = 1.0;

  int n_states() const { return static_cast<int>(states.size()); }
  int state_index(int label) const;
  int n_joint_actions() const;
  std::vector<int> decode_joint(int joint_idx) const;  // per-agent action indices
  int encode_joint(const std::vector<int>& per_agent_action_idx) const;

  void validate() const;  // totality and shape checks

  bool operator==(const TabularGame& other) const = default;
};

std::string to_json_string(const TabularGame& game);
TabularGame tabular_game_from_json(const std::string& text);

/// Exact finite-horizon backward induction for a single-agent game.
/// q[t](s_idx, a_idx) is the optimal return taking a at s with t stages left
/// counted from stage t of `horizon` total stages.
struct ValueIterationResult {
  std::vector<Eigen::MatrixXd> q;  // one matrix per stage, index [t]
  std::vector<Eigen::VectorXd> v;
};
ValueIterationResult value_iteration(const TabularGame& mdp);

/// Exhaustive search over open-loop joint plans; the exact max-min value.
struct BruteForceResult {
  std::vector<int> best_plan;  // joint action index per stage
  double value = 0.0;          // max over plans of min over agents
  long long plans_searched = 0;
};
BruteForceResult brute_force_minmax(const TabularGame& game, int initial_state_label,
                                    long long plan_guard = 1000000);

/// Stage-wise max-min dynamic programming (the principle that fails for
/// this objective): at each state pick the action optimizing the remaining
/// subproblem, then evaluate the induced policy from the start.
struct GreedyDpResult {
  double value = 0.0;                    // min over agents following the DP policy
  std::vector<double> agent_values;      // per-agent cumulative from the start
  std::vector<std::vector<int>> policy;  // [t][s_idx] -> joint action index
};
GreedyDpResult greedy_dp_minmax(const TabularGame& game, int initial_state_label);

/// The two-agent, two-stage game on which stage-wise DP is strictly
/// suboptimal for the max-min objective. The verdict carries both values.
struct DpCounterexampleVerdict {
  TabularGame game;
  int initial_state_label = 0;
  double greedy_value = 0.0;
  double optimal_value = 0.0;
  bool dp_fails = false;  // optimal_value > greedy_value
};
DpCounterexampleVerdict dp_failure_counterexample();

/// Three-state chain MDP used to validate the planner against value
/// iteration (single agent, two actions, deterministic).
TabularGame three_state_chain_mdp();

/// Wraps a single-agent TabularGame as a GenerativeModel whose states and
/// actions are 1-D label vectors; sample_action draws uniformly from the
/// action labels.
std::unique_ptr<GenerativeModel> make_tabular_model(const TabularGame& game);

/// Rollout policy that always plays one fixed action index.
class FixedActionRollout final : public RolloutPolicy {
 public:
  explicit FixedActionRollout(double action_label) : label_(action_label) {}
  double estimate_return(const Eigen::VectorXd& state, int steps, const GenerativeModel& model,
                         Rng& rng) const override;

 private:
  double label_;
};

}  // namespace maxmin
