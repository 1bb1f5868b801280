#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <map>

#include "maxmin/planner.hpp"
#include "maxmin/tabular.hpp"

using namespace maxmin;

namespace {

PlannerConfig chain_cfg(int queries, int depth, std::uint64_t seed) {
  PlannerConfig cfg;
  cfg.n_queries = queries;
  cfg.max_depth = depth;
  cfg.ucb_c = 2.0;
  cfg.rng_seed = seed;
  return cfg;
}

Eigen::VectorXd scalar(double v) {
  Eigen::VectorXd x(1);
  x[0] = v;
  return x;
}

/// Two equally likely outcomes; used to exercise outcome widening.
class CoinModel final : public GenerativeModel {
 public:
  CoinModel() : box_(Box::unit(1)) {}
  int state_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  const Box& action_box() const override { return box_; }
  std::pair<Eigen::VectorXd, double> step(const Eigen::VectorXd& s, const Eigen::VectorXd&,
                                          Rng& rng) const override {
    std::uniform_int_distribution<int> coin(0, 1);
    const double up = coin(rng) ? 1.0 : 0.0;
    Eigen::VectorXd next(1);
    next[0] = s[0] + up;
    return {next, up};
  }
  double discount() const override { return 1.0; }
  int horizon() const override { return 4; }
  bool deterministic() const override { return false; }

 private:
  Box box_;
};

class ThrowingModel final : public GenerativeModel {
 public:
  ThrowingModel() : box_(Box::unit(1)) {}
  int state_dim() const override { return 1; }
  int action_dim() const override { return 1; }
  const Box& action_box() const override { return box_; }
  std::pair<Eigen::VectorXd, double> step(const Eigen::VectorXd&, const Eigen::VectorXd&,
                                          Rng&) const override {
    throw std::runtime_error("simulated fault");
  }
  double discount() const override { return 1.0; }
  int horizon() const override { return 3; }
  bool deterministic() const override { return true; }

 private:
  Box box_;
};

class ZeroRollout final : public RolloutPolicy {
 public:
  double estimate_return(const Eigen::VectorXd&, int, const GenerativeModel&,
                         Rng&) const override {
    return 0.0;
  }
};

}  // namespace

TEST_CASE("should_widen follows the progressive widening bound") {
  // first child is always forced
  CHECK(should_widen(0, 1, 2.0, 0.5));
  CHECK(should_widen(0, 1, 0.0, 0.5));
  // n=1, no children, k=2: 0 < 2
  CHECK(should_widen(1, 1, 2.0, 0.5));
  // n=4 with 4 children, k=2, alpha=0.5: 4 < 2*sqrt(4) fails -> descend
  CHECK_FALSE(should_widen(4, 4, 2.0, 0.5));
  CHECK(should_widen(3, 4, 2.0, 0.5));
  // k=0 never widens once a child exists
  CHECK_FALSE(should_widen(1, 1000000, 0.0, 0.5));
}

TEST_CASE("ucb1_select: exploitation, exploration, tie rule") {
  TreeNode node;
  node.visits = 2;
  ActionEdge a, b;
  a.action = scalar(0.0);
  b.action = scalar(1.0);

  SUBCASE("single child") {
    a.visits = 1;
    node.edges = {a};
    CHECK(ucb1_select(node, 10.0) == 0);
  }
  SUBCASE("pure exploitation picks the larger mean") {
    a.visits = 1;
    a.q_mean = 1.0;
    b.visits = 1;
    b.q_mean = 0.0;
    node.edges = {a, b};
    CHECK(ucb1_select(node, 0.0) == 0);
    node.edges = {b, a};
    CHECK(ucb1_select(node, 0.0) == 1);
  }
  SUBCASE("exploration bonus favors the rarely visited child") {
    node.visits = 101;
    a.visits = 100;
    a.q_mean = 0.5;
    b.visits = 1;
    b.q_mean = 0.5;
    node.edges = {a, b};
    for (double c : {1e-6, 0.1, 1.0, 50.0}) CHECK(ucb1_select(node, c) == 1);
  }
  SUBCASE("exact ties break to the lowest insertion index") {
    a.visits = 3;
    a.q_mean = 0.7;
    b.visits = 3;
    b.q_mean = 0.7;
    node.edges = {a, b};
    node.visits = 6;
    CHECK(ucb1_select(node, 1.0) == 0);
  }
}

TEST_CASE("depth-1 search: Q equals reward plus discounted rollout tail, exactly") {
  const TabularGame chain = three_state_chain_mdp();
  const auto model = make_tabular_model(chain);
  const FixedActionRollout rollout(0.0);

  SearchTree tree(*model, rollout, chain_cfg(200, 1, 42));
  tree.set_root(scalar(0.0));
  tree.run_queries(200);
  const auto samples = tree.root_samples();
  REQUIRE(samples.size() == 2);  // both chain actions found

  Rng probe(0);
  for (const auto& s : samples) {
    Rng step_rng(0);
    const auto [next, reward] = model->step(scalar(0.0), s.action, step_rng);
    const double tail = rollout.estimate_return(next, chain.horizon - 1, *model, probe);
    CHECK(s.value == reward + chain.discount * tail);
  }
}

TEST_CASE("one query yields exactly one root sample; L queries visit the root L times") {
  const TabularGame chain = three_state_chain_mdp();
  const auto model = make_tabular_model(chain);
  const FixedActionRollout rollout(0.0);

  const auto one = plan(scalar(0.0), *model, rollout, chain_cfg(1, 3, 7));
  CHECK(one.size() == 1);

  SearchTree tree(*model, rollout, chain_cfg(137, 3, 7));
  tree.set_root(scalar(0.0));
  tree.run_queries(137);
  CHECK(tree.node(tree.root_id()).visits == 137);
  CHECK_NOTHROW(tree.check_widening_bound());
}

TEST_CASE("plan is bit-reproducible under a fixed seed") {
  const TabularGame chain = three_state_chain_mdp();
  const auto model = make_tabular_model(chain);
  const FixedActionRollout rollout(0.0);
  const auto a = plan(scalar(0.0), *model, rollout, chain_cfg(500, 3, 99));
  const auto b = plan(scalar(0.0), *model, rollout, chain_cfg(500, 3, 99));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].action == b[i].action);
    CHECK(a[i].value == b[i].value);
  }
}

TEST_CASE("root values approach the value-iteration oracle as L grows") {
  const TabularGame chain = three_state_chain_mdp();
  const ValueIterationResult vi = value_iteration(chain);
  const int s0 = chain.state_index(0);
  const auto model = make_tabular_model(chain);
  const FixedActionRollout rollout(0.0);

  double last_err = 1e9;
  for (int queries : {100, 500, 2000}) {
    double err = 0.0;
    const int n_seeds = 5;
    for (int seed = 1; seed <= n_seeds; ++seed) {
      const auto samples =
          plan(scalar(0.0), *model, rollout, chain_cfg(queries, chain.horizon, 1000 + seed));
      double worst = 0.0;
      bool have[2] = {false, false};
      for (const auto& s : samples) {
        const int a = static_cast<int>(std::lround(s.action[0]));
        have[a] = true;
        worst = std::max(worst,
                         std::abs(s.value - vi.q[0](s0, a)) / std::abs(vi.q[0](s0, a)));
      }
      REQUIRE(have[0]);
      REQUIRE(have[1]);
      err += worst / n_seeds;
    }
    CHECK(err <= last_err);
    last_err = err;
  }
  CHECK(last_err < 0.05);  // 5% relative at L=2000
}

TEST_CASE("returns stay inside the horizon-weighted reward envelope") {
  const TabularGame chain = three_state_chain_mdp();
  const auto model = make_tabular_model(chain);
  const FixedActionRollout rollout(0.0);
  const auto samples = plan(scalar(0.0), *model, rollout, chain_cfg(800, chain.horizon, 5));
  // rewards lie in [1.7, 2.5]; any discounted return over <= 3 stages must
  // lie inside the geometric envelope
  const double weight = 1.0 + 0.95 + 0.95 * 0.95;
  for (const auto& s : samples) {
    CHECK(s.value >= 1.7 * weight - 1e-12);
    CHECK(s.value <= 2.5 * weight + 1e-12);
    CHECK(model->action_box().contains(s.action));
  }
}

TEST_CASE("trajectory log replays to the exact running means") {
  const TabularGame chain = three_state_chain_mdp();
  const auto model = make_tabular_model(chain);
  const FixedActionRollout rollout(0.0);
  PlannerConfig cfg = chain_cfg(400, chain.horizon, 21);
  cfg.record_trajectories = true;

  SearchTree tree(*model, rollout, cfg);
  tree.set_root(scalar(0.0));
  tree.run_queries(cfg.n_queries);

  // replay: recompute each edge's mean of propagated returns in query order
  std::map<std::pair<int, int>, std::pair<int, double>> replay;  // (visits, mean)
  for (const auto& trace : tree.traces()) {
    REQUIRE(!trace.steps.empty());
    std::vector<double> totals(trace.steps.size());
    double below = trace.leaf_estimate;
    for (int k = static_cast<int>(trace.steps.size()) - 1; k >= 0; --k) {
      totals[k] = trace.steps[k].reward + chain.discount * below;
      below = totals[k];
    }
    for (std::size_t k = 0; k < trace.steps.size(); ++k) {
      auto& cell = replay[{trace.steps[k].node, trace.steps[k].edge}];
      cell.first += 1;
      cell.second += (totals[k] - cell.second) / cell.first;
    }
  }
  const std::string log = format_trajectory_log(tree);
  CHECK(log.find("q=0 steps=") == 0);

  int checked = 0;
  for (const auto& [key, stat] : replay) {
    const auto& edge = tree.node(key.first).edges[key.second];
    CHECK(edge.visits == stat.first);
    CHECK(edge.q_mean == doctest::Approx(stat.second).epsilon(1e-12));
    ++checked;
  }
  CHECK(checked >= 3);
}

TEST_CASE("stochastic models widen outcomes up to the bound") {
  const CoinModel model;
  const ZeroRollout rollout;
  PlannerConfig cfg;
  cfg.n_queries = 600;
  cfg.max_depth = 2;
  cfg.ucb_c = 1.0;
  cfg.k_action = 1.0;  // keep the action fan small so edges get many visits
  cfg.alpha_action = 0.3;
  cfg.rng_seed = 3;

  SUBCASE("k_outcome > 0 admits both outcomes") {
    cfg.k_outcome = 1.0;
    cfg.alpha_outcome = 0.5;
    SearchTree tree(model, rollout, cfg);
    tree.set_root(scalar(0.0));
    tree.run_queries(cfg.n_queries);
    int max_outcomes = 0;
    for (int id = 0; id < tree.n_nodes(); ++id)
      for (const auto& e : tree.node(id).edges) {
        max_outcomes = std::max(max_outcomes, static_cast<int>(e.outcomes.size()));
        const int bound = std::max(
            1, static_cast<int>(std::ceil(cfg.k_outcome * std::pow(e.visits, cfg.alpha_outcome))));
        CHECK(static_cast<int>(e.outcomes.size()) <= bound);
      }
    CHECK(max_outcomes == 2);  // the coin has two outcomes and both appear
  }
  SUBCASE("k_outcome = 0 keeps a single outcome child") {
    cfg.k_outcome = 0.0;
    SearchTree tree(model, rollout, cfg);
    tree.set_root(scalar(0.0));
    tree.run_queries(cfg.n_queries);
    for (int id = 0; id < tree.n_nodes(); ++id)
      for (const auto& e : tree.node(id).edges) CHECK(e.outcomes.size() <= 1);
  }
}

TEST_CASE("model faults surface as planner errors with query context") {
  const ThrowingModel model;
  const ZeroRollout rollout;
  try {
    plan(scalar(0.5), model, rollout, chain_cfg(4, 2, 1));
    FAIL("expected PlannerError");
  } catch (const PlannerError& e) {
    const std::string what = e.what();
    CHECK(what.find("query") != std::string::npos);
    CHECK(what.find("simulated fault") != std::string::npos);
  }
}

TEST_CASE("config validation") {
  PlannerConfig cfg;
  cfg.n_queries = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = PlannerConfig{};
  cfg.alpha_action = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = PlannerConfig{};
  cfg.ucb_c = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  const TabularGame chain = three_state_chain_mdp();
  const auto model = make_tabular_model(chain);
  const FixedActionRollout rollout(0.0);
  SearchTree tree(*model, rollout, chain_cfg(1, 1, 0));
  Eigen::VectorXd wrong(2);
  wrong << 0.0, 0.0;
  CHECK_THROWS_AS(tree.set_root(wrong), std::invalid_argument);
}

TEST_CASE("a custom selection rule can replace UCB1") {
  struct FirstChild final : SelectionRule {
    int select(const TreeNode&, double) const override { return 0; }
  };
  const TabularGame chain = three_state_chain_mdp();
  const auto model = make_tabular_model(chain);
  const FixedActionRollout rollout(0.0);
  const FirstChild rule;
  SearchTree tree(*model, rollout, chain_cfg(100, chain.horizon, 13), &rule);
  tree.set_root(Eigen::VectorXd::Zero(1));
  tree.run_queries(100);
  // every descent that did not widen went through child 0
  const TreeNode& root = tree.node(tree.root_id());
  REQUIRE(root.edges.size() >= 2);
  CHECK(root.edges[0].visits > root.edges[1].visits);
}
