#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "maxmin/formation_env.hpp"
#include "maxmin/minmax_opt.hpp"

using namespace maxmin;

namespace {

class AbsObjective final : public LocalObjective {
 public:
  double value(const Eigen::VectorXd& a) const override { return std::abs(a[0]); }
  Eigen::VectorXd subgradient(const Eigen::VectorXd& a) const override {
    Eigen::VectorXd g(1);
    g[0] = a[0] >= 0.0 ? 1.0 : -1.0;
    return g;
  }
};

class ShiftedSquare final : public LocalObjective {
 public:
  explicit ShiftedSquare(double c) : c_(c) {}
  double value(const Eigen::VectorXd& a) const override { return (a[0] - c_) * (a[0] - c_); }
  Eigen::VectorXd subgradient(const Eigen::VectorXd& a) const override {
    Eigen::VectorXd g(1);
    g[0] = 2.0 * (a[0] - c_);
    return g;
  }

 private:
  double c_;
};

OptimizerConfig quad_config(long long iters) {
  OptimizerConfig cfg;
  cfg.n_iters = iters;
  cfg.step.beta0 = 1.0;
  cfg.step.exponent = 1.0;
  cfg.r_scale = 2.0;
  cfg.record_trace = false;
  return cfg;
}

std::vector<AgentIterate> centered_init(int n, const Box& box,
                                        const std::vector<const LocalObjective*>& objs) {
  std::vector<AgentIterate> init;
  for (int i = 0; i < n; ++i) init.emplace_back(box.center(), objs[i]->value(box.center()));
  return init;
}

}  // namespace

TEST_CASE("metropolis rows match the closed form") {
  SUBCASE("two-agent path") {
    const Topology t(2, {{0, 1}});
    const Eigen::VectorXd row = metropolis_row(t, 0);
    // neighborhood {0,1}: self then the neighbor
    CHECK(row[0] == doctest::Approx(0.5));
    CHECK(row[1] == doctest::Approx(0.5));
  }
  SUBCASE("star center with three leaves") {
    const Topology star(4, {{0, 1}, {0, 2}, {0, 3}});
    const Eigen::VectorXd row = metropolis_row(star, 0);
    CHECK(row[0] == doctest::Approx(0.25));  // self weight
    for (int k = 1; k < 4; ++k) CHECK(row[k] == doctest::Approx(0.25));
    // a leaf keeps the remainder on itself
    const Eigen::VectorXd leaf = metropolis_row(star, 1);
    CHECK(leaf[0] == doctest::Approx(0.25));  // toward the hub
    CHECK(leaf[1] == doctest::Approx(0.75));
  }
  SUBCASE("isolated agent") {
    const Topology t(2, {});
    const Eigen::VectorXd row = metropolis_row(t, 0);
    REQUIRE(row.size() == 1);
    CHECK(row[0] == 1.0);
  }
  SUBCASE("doubly stochastic on random graphs") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 3 + static_cast<int>(rng() % 6);
      std::vector<std::pair<int, int>> edges;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          if (rng() % 2) edges.push_back({i, j});
      const Topology topo(n, edges);
      Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < n; ++i) {
        const Eigen::VectorXd row = metropolis_row(topo, i);
        const auto& hood = topo.neighborhood(i);
        for (std::size_t k = 0; k < hood.size(); ++k) W(i, hood[k]) = row[k];
      }
      for (int i = 0; i < n; ++i) {
        CHECK(std::abs(W.row(i).sum() - 1.0) <= 1e-12);
        CHECK(std::abs(W.col(i).sum() - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("mix is a validated convex combination") {
  AgentIterate a(Eigen::VectorXd::Zero(1), 0.0);
  AgentIterate b(Eigen::VectorXd::Constant(1, 2.0), 4.0);

  SUBCASE("single agent identity") {
    Eigen::VectorXd w(1);
    w << 1.0;
    const AgentIterate m = mix({a}, w);
    CHECK(m.alpha == a.alpha);
    CHECK(m.eta == a.eta);
  }
  SUBCASE("combination of equals is the same iterate") {
    Eigen::VectorXd w(2);
    w << 0.5, 0.5;
    const AgentIterate m = mix({b, b}, w);
    CHECK(m.alpha == b.alpha);
    CHECK(m.eta == b.eta);
  }
  SUBCASE("midpoint") {
    Eigen::VectorXd w(2);
    w << 0.5, 0.5;
    const AgentIterate m = mix({a, b}, w);
    CHECK(m.alpha[0] == 1.0);
    CHECK(m.eta == 2.0);
  }
  SUBCASE("invalid rows are rejected") {
    Eigen::VectorXd w(2);
    w << 0.9, 0.3;
    CHECK_THROWS_AS(mix({a, b}, w), std::invalid_argument);
    w << 1.3, -0.3;
    CHECK_THROWS_AS(mix({a, b}, w), std::invalid_argument);
    Eigen::VectorXd short_w(1);
    short_w << 1.0;
    CHECK_THROWS_AS(mix({a, b}, short_w), std::invalid_argument);
  }
}

TEST_CASE("step with inactive penalty is the drifted mix, projected") {
  ShiftedSquare f(0.0);
  OptimizerConfig cfg = quad_config(1);
  const Box box = Box::cube(1, -1.0, 1.0);
  AgentIterate mixed(Eigen::VectorXd::Constant(1, 2.0), 100.0);  // f(2)=4 << eta
  const AgentIterate next = minmax_step(0, mixed, 0, f, cfg, box, 3, nullptr);
  CHECK(next.alpha[0] == 1.0);                       // clipped to the box
  CHECK(next.eta == doctest::Approx(100.0 - cfg.step.at(0) / 3.0));
}

TEST_CASE("single agent |alpha| settles at the analytic optimum") {
  AbsObjective f;
  std::vector<const LocalObjective*> objs{&f};
  OptimizerConfig cfg = quad_config(5000);
  const Box box = Box::cube(1, -1.0, 1.0);
  const TopologySchedule net(Topology(1, {}));
  const auto result =
      run_consensus_minmax(net, objs, cfg, box, centered_init(1, box, objs));
  CHECK(std::abs(result.final_iterates[0].alpha[0]) <= 1e-2);
  CHECK(std::abs(result.final_iterates[0].eta) <= 1e-2);
}

TEST_CASE("three quadratics on a path reach the balanced min-max point") {
  const Topology path(3, {{0, 1}, {1, 2}});
  ShiftedSquare f0(0.0), f1(1.0), f2(2.0);
  std::vector<const LocalObjective*> objs{&f0, &f1, &f2};
  const Box box = Box::cube(1, -10.0, 10.0);

  SUBCASE("fixture accuracy at K=20000") {
    AccessAudit audit;
    const auto result = run_consensus_minmax(TopologySchedule(path), objs, quad_config(20000),
                                             box, centered_init(3, box, objs), &audit);
    for (int i = 0; i < 3; ++i) {
      CHECK(std::abs(result.final_iterates[i].alpha[0] - 1.0) <= 5e-2);
      CHECK(std::abs(result.final_iterates[i].eta - 1.0) <= 5e-2);
    }
    CHECK(result.disagreement_per_round.back() < 1e-2);
    CHECK(audit.clean());
    CHECK(audit.total_accesses() == 20000 * (2 + 3 + 2));  // neighborhood sizes per round
  }

  SUBCASE("error trend is decreasing across K") {
    double prev = 1e9;
    for (long long iters : {2000LL, 20000LL, 200000LL}) {
      const auto result = run_consensus_minmax(TopologySchedule(path), objs,
                                               quad_config(iters), box,
                                               centered_init(3, box, objs));
      double err = 0.0;
      for (int i = 0; i < 3; ++i) {
        const Eigen::Vector2d d(result.final_iterates[i].alpha[0] - 1.0,
                                result.final_iterates[i].eta - 1.0);
        err = std::max(err, d.norm());
      }
      CHECK(err < prev);
      prev = err;
    }
  }

  SUBCASE("round-switching topology still converges") {
    std::vector<TopologySchedule::Entry> entries;
    entries.push_back({Topology(3, {{0, 1}}), 1});
    entries.push_back({Topology(3, {{1, 2}}), 1});
    const TopologySchedule alternating(entries, true);
    const auto result = run_consensus_minmax(alternating, objs, quad_config(40000), box,
                                             centered_init(3, box, objs));
    for (int i = 0; i < 3; ++i)
      CHECK(std::abs(result.final_iterates[i].alpha[0] - 1.0) <= 1e-1);
  }

  SUBCASE("gaussian subgradient noise still lands near the optimum") {
    OptimizerConfig cfg = quad_config(40000);
    cfg.noise.kind = NoiseSpec::Kind::Gaussian;
    cfg.noise.sigma = 0.5;
    cfg.rng_seed = 9;
    const auto result = run_consensus_minmax(TopologySchedule(path), objs, cfg, box,
                                             centered_init(3, box, objs));
    for (int i = 0; i < 3; ++i)
      CHECK(std::abs(result.final_iterates[i].alpha[0] - 1.0) <= 2e-1);
  }
}

TEST_CASE("symmetry: identical objectives and inits stay identical") {
  const Topology path(3, {{0, 1}, {1, 2}});
  ShiftedSquare f(0.5);
  std::vector<const LocalObjective*> objs{&f, &f, &f};
  OptimizerConfig cfg = quad_config(200);
  cfg.record_trace = true;
  const Box box = Box::cube(1, -2.0, 2.0);
  const auto result = run_consensus_minmax(TopologySchedule(path), objs, cfg, box,
                                           centered_init(3, box, objs));
  // identical inputs mix through different weight rows, so agreement holds
  // to rounding (one ulp of the combination), not bitwise
  for (double d : result.disagreement_per_round) CHECK(d <= 1e-12);
  CHECK((result.final_iterates[0].alpha - result.final_iterates[1].alpha).norm() <= 1e-12);
  CHECK(result.final_iterates[1].eta == doctest::Approx(result.final_iterates[2].eta).epsilon(1e-14));
}

TEST_CASE("zero iterations returns the initial iterates unchanged") {
  const Topology pair(2, {{0, 1}});
  ShiftedSquare f(0.0);
  std::vector<const LocalObjective*> objs{&f, &f};
  const Box box = Box::cube(1, -1.0, 1.0);
  std::vector<AgentIterate> init;
  init.emplace_back(Eigen::VectorXd::Constant(1, 0.25), 7.0);
  init.emplace_back(Eigen::VectorXd::Constant(1, -0.5), -3.0);
  const auto result =
      run_consensus_minmax(TopologySchedule(pair), objs, quad_config(0), box, init);
  CHECK(result.final_iterates[0].alpha[0] == 0.25);
  CHECK(result.final_iterates[0].eta == 7.0);
  CHECK(result.final_iterates[1].alpha[0] == -0.5);
  CHECK(result.final_iterates[1].eta == -3.0);
}

TEST_CASE("disconnected topologies warn; bad configs throw") {
  const Topology disconnected(3, {});
  ShiftedSquare f(0.0);
  std::vector<const LocalObjective*> objs{&f, &f, &f};
  const Box box = Box::cube(1, -1.0, 1.0);
  const auto result = run_consensus_minmax(TopologySchedule(disconnected), objs,
                                           quad_config(5), box, centered_init(3, box, objs));
  CHECK(result.topology_connected_warning);

  OptimizerConfig bad = quad_config(5);
  bad.r_scale = 1.0;  // must exceed 1
  CHECK_THROWS_AS(run_consensus_minmax(TopologySchedule(disconnected), objs, bad, box,
                                       centered_init(3, box, objs)),
                  std::invalid_argument);
  OptimizerConfig bad_step = quad_config(5);
  bad_step.step.exponent = 0.4;  // sum of squares would diverge
  CHECK_THROWS_AS(run_consensus_minmax(TopologySchedule(disconnected), objs, bad_step, box,
                                       centered_init(3, box, objs)),
                  std::invalid_argument);
}

TEST_CASE("audit flags non-neighbor reads") {
  const Topology path(3, {{0, 1}, {1, 2}});
  AccessAudit audit;
  CHECK(audit.record(path, 0, 1, "state"));
  CHECK(audit.record(path, 2, 2, "state"));
  CHECK_FALSE(audit.record(path, 0, 2, "state"));
  CHECK(audit.total_accesses() == 3);
  REQUIRE(audit.violations().size() == 1);
  CHECK(audit.violations()[0].reader == 0);
  CHECK(audit.violations()[0].owner == 2);
}

TEST_CASE("trace rows land in the CSV") {
  const Topology pair(2, {{0, 1}});
  ShiftedSquare f(0.0);
  std::vector<const LocalObjective*> objs{&f, &f};
  OptimizerConfig cfg = quad_config(3);
  cfg.record_trace = true;
  const Box box = Box::cube(1, -1.0, 1.0);
  const auto result = run_consensus_minmax(TopologySchedule(pair), objs, cfg, box,
                                           centered_init(2, box, objs));
  REQUIRE(result.trace.size() == 6);  // 3 rounds x 2 agents
  const std::string path = "trace_test.csv";
  write_trace_csv(result.trace, path);
  std::ifstream in(path);
  std::string header, columns;
  std::getline(in, header);
  std::getline(in, columns);
  CHECK(header.find("consensus_trace_csv v1") != std::string::npos);
  CHECK(columns == "round,agent,eta,disagreement,objective_value_at_own_alpha");
  std::remove(path.c_str());
}
