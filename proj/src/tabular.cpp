#include "maxmin/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace maxmin {

int TabularGame::state_index(int label) const {
  for (int s = 0; s < n_states(); ++s)
    if (states[s] == label) return s;
  throw std::invalid_argument("TabularGame: unknown state label " + std::to_string(label));
}

int TabularGame::n_joint_actions() const {
  int n = 1;
  for (const auto& a : actions) n *= static_cast<int>(a.size());
  return n;
}

std::vector<int> TabularGame::decode_joint(int joint_idx) const {
  std::vector<int> out(n_agents);
  for (int i = 0; i < n_agents; ++i) {
    const int base = static_cast<int>(actions[i].size());
    out[i] = joint_idx % base;
    joint_idx /= base;
  }
  return out;
}

int TabularGame::encode_joint(const std::vector<int>& per_agent) const {
  int idx = 0;
  for (int i = n_agents - 1; i >= 0; --i) {
    const int base = static_cast<int>(actions[i].size());
    if (per_agent[i] < 0 || per_agent[i] >= base)
      throw std::invalid_argument("TabularGame: action index out of range");
    idx = idx * base + per_agent[i];
  }
  return idx;
}

void TabularGame::validate() const {
  if (n_agents < 1) throw std::invalid_argument("TabularGame: n_agents >= 1");
  if (static_cast<int>(actions.size()) != n_agents)
    throw std::invalid_argument("TabularGame: one action set per agent");
  if (horizon < 0) throw std::invalid_argument("TabularGame: horizon >= 0");
  const int ns = n_states();
  const int na = n_joint_actions();
  if (static_cast<int>(transition.size()) != ns)
    throw std::invalid_argument("TabularGame: transition table must cover every state");
  for (const auto& row : transition) {
    if (static_cast<int>(row.size()) != na)
      throw std::invalid_argument("TabularGame: transition table must cover every joint action");
    for (int next : row)
      if (next < 0 || next >= ns)
        throw std::invalid_argument("TabularGame: transition target out of range");
  }
  if (static_cast<int>(rewards.size()) != n_agents)
    throw std::invalid_argument("TabularGame: one reward table per agent");
  for (const auto& table : rewards) {
    if (static_cast<int>(table.size()) != ns ||
        std::any_of(table.begin(), table.end(),
                    [na](const std::vector<double>& r) { return static_cast<int>(r.size()) != na; }))
      throw std::invalid_argument("TabularGame: reward table shape mismatch");
  }
}

std::string to_json_string(const TabularGame& game) {
  nlohmann::json j;
  j["format"] = "tabular_game_v1";
  j["n_agents"] = game.n_agents;
  j["states"] = game.states;
  j["actions"] = game.actions;
  j["transition"] = game.transition;
  j["rewards"] = game.rewards;
  j["horizon"] = game.horizon;
  j["discount"] = game.discount;
  return j.dump(2);
}

TabularGame tabular_game_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("format").get<std::string>() != "tabular_game_v1")
    throw std::invalid_argument("tabular_game_from_json: unknown format");
  TabularGame game;
  game.n_agents = j.at("n_agents").get<int>();
  game.states = j.at("states").get<std::vector<int>>();
  game.actions = j.at("actions").get<std::vector<std::vector<int>>>();
  game.transition = j.at("transition").get<std::vector<std::vector<int>>>();
  game.rewards = j.at("rewards").get<std::vector<std::vector<std::vector<double>>>>();
  game.horizon = j.at("horizon").get<int>();
  game.discount = j.at("discount").get<double>();
  game.validate();
  return game;
}

ValueIterationResult value_iteration(const TabularGame& mdp) {
  mdp.validate();
  if (mdp.n_agents != 1)
    throw std::invalid_argument("value_iteration: single-agent games only");
  const int ns = mdp.n_states();
  const int na = mdp.n_joint_actions();
  ValueIterationResult out;
  out.q.assign(mdp.horizon, Eigen::MatrixXd::Zero(ns, na));
  out.v.assign(mdp.horizon + 1, Eigen::VectorXd::Zero(ns));
  for (int t = mdp.horizon - 1; t >= 0; --t) {
    for (int s = 0; s < ns; ++s) {
      for (int a = 0; a < na; ++a)
        out.q[t](s, a) = mdp.rewards[0][s][a] + mdp.discount * out.v[t + 1][mdp.transition[s][a]];
      out.v[t][s] = out.q[t].row(s).maxCoeff();
    }
  }
  out.v.resize(mdp.horizon + 1);
  return out;
}

BruteForceResult brute_force_minmax(const TabularGame& game, int initial_state_label,
                                    long long plan_guard) {
  game.validate();
  const int na = game.n_joint_actions();
  double plan_count = std::pow(static_cast<double>(na), game.horizon);
  if (plan_count > static_cast<double>(plan_guard))
    throw std::invalid_argument("brute_force_minmax: " + std::to_string(plan_count) +
                                " plans exceed the guard of " + std::to_string(plan_guard));

  const int s0 = game.state_index(initial_state_label);
  BruteForceResult best;
  best.value = -std::numeric_limits<double>::infinity();

  std::vector<int> plan(game.horizon, 0);
  const long long total = static_cast<long long>(plan_count);
  for (long long code = 0; code < std::max(total, 1LL); ++code) {
    long long c = code;
    for (int t = 0; t < game.horizon; ++t) {
      plan[t] = static_cast<int>(c % na);
      c /= na;
    }
    std::vector<double> cum(game.n_agents, 0.0);
    int s = s0;
    double w = 1.0;
    for (int t = 0; t < game.horizon; ++t) {
      for (int i = 0; i < game.n_agents; ++i) cum[i] += w * game.rewards[i][s][plan[t]];
      s = game.transition[s][plan[t]];
      w *= game.discount;
    }
    const double worst = *std::min_element(cum.begin(), cum.end());
    if (worst > best.value) {
      best.value = worst;
      best.best_plan = plan;
    }
    ++best.plans_searched;
  }
  if (game.horizon == 0) best.value = 0.0;
  return best;
}

GreedyDpResult greedy_dp_minmax(const TabularGame& game, int initial_state_label) {
  game.validate();
  const int ns = game.n_states();
  const int na = game.n_joint_actions();

  // values[i][s]: agent i's cumulative reward from s under the stage-wise policy
  std::vector<std::vector<double>> values(game.n_agents, std::vector<double>(ns, 0.0));
  GreedyDpResult out;
  out.policy.assign(game.horizon, std::vector<int>(ns, 0));

  for (int t = game.horizon - 1; t >= 0; --t) {
    std::vector<std::vector<double>> next(game.n_agents, std::vector<double>(ns, 0.0));
    for (int s = 0; s < ns; ++s) {
      int best_a = 0;
      double best_worst = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < na; ++a) {
        double worst = std::numeric_limits<double>::infinity();
        for (int i = 0; i < game.n_agents; ++i) {
          const double v =
              game.rewards[i][s][a] + game.discount * values[i][game.transition[s][a]];
          worst = std::min(worst, v);
        }
        if (worst > best_worst) {
          best_worst = worst;
          best_a = a;
        }
      }
      out.policy[t][s] = best_a;
      for (int i = 0; i < game.n_agents; ++i)
        next[i][s] = game.rewards[i][s][best_a] +
                     game.discount * values[i][game.transition[s][best_a]];
    }
    values = std::move(next);
  }

  const int s0 = game.state_index(initial_state_label);
  out.agent_values.resize(game.n_agents);
  double worst = game.horizon == 0 ? 0.0 : std::numeric_limits<double>::infinity();
  for (int i = 0; i < game.n_agents; ++i) {
    out.agent_values[i] = game.horizon == 0 ? 0.0 : values[i][s0];
    worst = std::min(worst, out.agent_values[i]);
  }
  out.value = game.horizon == 0 ? 0.0 : worst;
  return out;
}

DpCounterexampleVerdict dp_failure_counterexample() {
  TabularGame game;
  game.n_agents = 2;
  game.states = {0, 2, 3, 4, 5, 6, 7, 8};
  game.actions = {{1, 2}, {1, 2}};
  game.horizon = 2;
  game.discount = 1.0;

  const int ns = game.n_states();
  const int na = 4;
  game.transition.assign(ns, std::vector<int>(na, 0));
  game.rewards.assign(2, std::vector<std::vector<double>>(ns, std::vector<double>(na, 0.0)));

  auto move_sum = [&](int s_label) {
    const int s = game.state_index(s_label);
    for (int j = 0; j < na; ++j) {
      const auto idx = game.decode_joint(j);
      const int a1 = game.actions[0][idx[0]];
      const int a2 = game.actions[1][idx[1]];
      game.transition[s][j] = game.state_index(std::min(s_label + a1 + a2, 8));
    }
  };
  // deterministic drift: s' = s + a1 + a2 (states past 8 unreachable in 2 stages)
  move_sum(0);
  move_sum(2);
  move_sum(3);
  move_sum(4);
  for (int label : {5, 6, 7, 8}) {  // totality for the terminal layer
    const int s = game.state_index(label);
    for (int j = 0; j < na; ++j) game.transition[s][j] = s;
  }

  // first stage: action-independent rewards at the initial state
  {
    const int s = game.state_index(0);
    for (int j = 0; j < na; ++j) {
      game.rewards[0][s][j] = 5.0;
      game.rewards[1][s][j] = 200.0;
    }
  }
  // second stage: each reachable state has one designated joint action that
  // is stage-wise max-min optimal and strictly worse overall
  auto designate = [&](int s_label, int a1, int a2) {
    const int s = game.state_index(s_label);
    const int star = game.encode_joint({a1 - 1, a2 - 1});  // labels {1,2} -> indices
    for (int j = 0; j < na; ++j) {
      if (j == star) {
        game.rewards[0][s][j] = 90.0;
        game.rewards[1][s][j] = 100.0;
      } else {
        game.rewards[0][s][j] = 200.0;
        game.rewards[1][s][j] = 50.0;
      }
    }
  };
  designate(2, 1, 1);
  designate(3, 1, 2);
  designate(4, 2, 1);

  game.validate();

  DpCounterexampleVerdict verdict;
  verdict.game = game;
  verdict.initial_state_label = 0;
  verdict.greedy_value = greedy_dp_minmax(game, 0).value;
  verdict.optimal_value = brute_force_minmax(game, 0).value;
  verdict.dp_fails = verdict.optimal_value > verdict.greedy_value;
  return verdict;
}

TabularGame three_state_chain_mdp() {
  TabularGame mdp;
  mdp.n_agents = 1;
  mdp.states = {0, 1, 2};
  mdp.actions = {{0, 1}};  // 0 = stay, 1 = advance (clamped at the end)
  mdp.horizon = 3;
  mdp.discount = 0.95;
  mdp.transition = {{0, 1}, {1, 2}, {2, 2}};
  mdp.rewards = {{{2.0, 1.7}, {2.0, 2.2}, {2.5, 2.5}}};
  mdp.validate();
  return mdp;
}

namespace {

class TabularModel final : public GenerativeModel {
 public:
  explicit TabularModel(TabularGame game) : game_(std::move(game)) {
    game_.validate();
    if (game_.n_agents != 1)
      throw std::invalid_argument("make_tabular_model: single-agent games only");
    const auto& labels = game_.actions[0];
    Eigen::VectorXd lo(1), hi(1);
    lo[0] = static_cast<double>(*std::min_element(labels.begin(), labels.end()));
    hi[0] = static_cast<double>(*std::max_element(labels.begin(), labels.end()));
    box_ = Box(lo, hi);
  }

  int state_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  const Box& action_box() const override { return box_; }

  Eigen::VectorXd sample_action(Rng& rng) const override {
    const auto& labels = game_.actions[0];
    std::uniform_int_distribution<int> pick(0, static_cast<int>(labels.size()) - 1);
    Eigen::VectorXd a(1);
    a[0] = static_cast<double>(labels[pick(rng)]);
    return a;
  }

  std::pair<Eigen::VectorXd, double> step(const Eigen::VectorXd& state,
                                          const Eigen::VectorXd& action, Rng&) const override {
    const int s = game_.state_index(static_cast<int>(std::lround(state[0])));
    const int a_label = static_cast<int>(std::lround(action[0]));
    const auto& labels = game_.actions[0];
    const auto it = std::find(labels.begin(), labels.end(), a_label);
    if (it == labels.end())
      throw std::invalid_argument("TabularModel: unknown action label");
    const int a = static_cast<int>(it - labels.begin());
    Eigen::VectorXd next(1);
    next[0] = static_cast<double>(game_.states[game_.transition[s][a]]);
    return {next, game_.rewards[0][s][a]};
  }

  double discount() const override { return game_.discount; }
  int horizon() const override { return game_.horizon; }
  bool deterministic() const override { return true; }

 private:
  TabularGame game_;
  Box box_;
};

}  // namespace

std::unique_ptr<GenerativeModel> make_tabular_model(const TabularGame& game) {
  return std::make_unique<TabularModel>(game);
}

double FixedActionRollout::estimate_return(const Eigen::VectorXd& state, int steps,
                                           const GenerativeModel& model, Rng& rng) const {
  Eigen::VectorXd s = state;
  Eigen::VectorXd a(1);
  a[0] = label_;
  double total = 0.0, w = 1.0;
  for (int t = 0; t < steps; ++t) {
    auto [next, reward] = model.step(s, a, rng);
    s = std::move(next);
    total += w * reward;
    w *= model.discount();
  }
  return total;
}

}  // namespace maxmin
