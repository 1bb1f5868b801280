#include "maxmin/selfcheck.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "maxmin/formation_env.hpp"
#include "maxmin/harness.hpp"
#include "maxmin/max_affine.hpp"
#include "maxmin/minmax_opt.hpp"
#include "maxmin/openloop.hpp"
#include "maxmin/planner.hpp"
#include "maxmin/tabular.hpp"

namespace maxmin {

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + ("FAILED: " + what);
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------- criterion 1

Check criterion_dp_counterexample() {
  Check c;
  const DpCounterexampleVerdict verdict = dp_failure_counterexample();
  c.expect(verdict.greedy_value == 95.0,
           "stage-wise DP value is " + fmt(verdict.greedy_value) + ", expected 95");
  c.expect(verdict.optimal_value == 205.0,
           "brute-force value is " + fmt(verdict.optimal_value) + ", expected 205");
  c.expect(verdict.dp_fails, "DP should be strictly suboptimal");
  c.note("greedy=" + fmt(verdict.greedy_value) + " optimal=" + fmt(verdict.optimal_value));
  return c;
}

// ---------------------------------------------------------------- criterion 2

class ShiftedSquare final : public LocalObjective {
 public:
  explicit ShiftedSquare(double center) : center_(center) {}
  double value(const Eigen::VectorXd& a) const override {
    return (a[0] - center_) * (a[0] - center_);
  }
  Eigen::VectorXd subgradient(const Eigen::VectorXd& a) const override {
    Eigen::VectorXd g(1);
    g[0] = 2.0 * (a[0] - center_);
    return g;
  }

 private:
  double center_;
};

Check criterion_optimizer_fixture() {
  Check c;
  const Topology path(3, {{0, 1}, {1, 2}});
  ShiftedSquare f0(0.0), f1(1.0), f2(2.0);
  std::vector<const LocalObjective*> objectives{&f0, &f1, &f2};
  OptimizerConfig cfg;
  cfg.n_iters = 20000;
  cfg.step.beta0 = 1.0;
  cfg.step.exponent = 1.0;
  cfg.r_scale = 2.0;
  cfg.record_trace = false;
  const Box box = Box::cube(1, -10.0, 10.0);
  std::vector<AgentIterate> init;
  for (int i = 0; i < 3; ++i)
    init.emplace_back(box.center(), objectives[i]->value(box.center()));

  AccessAudit audit;
  const ConsensusRunResult result = run_consensus_minmax(TopologySchedule(path), objectives,
                                                         cfg, box, std::move(init), &audit);
  for (int i = 0; i < 3; ++i) {
    const double da = std::abs(result.final_iterates[i].alpha[0] - 1.0);
    const double de = std::abs(result.final_iterates[i].eta - 1.0);
    c.expect(da <= 5e-2, "agent " + std::to_string(i + 1) + " |alpha-1|=" + fmt(da));
    c.expect(de <= 5e-2, "agent " + std::to_string(i + 1) + " |eta-1|=" + fmt(de));
  }
  const double dis = result.disagreement_per_round.back();
  c.expect(dis < 1e-2, "final disagreement=" + fmt(dis));
  c.expect(audit.clean(), "optimizer made non-neighbor reads");
  c.note("alpha=(" + fmt(result.final_iterates[0].alpha[0]) + "," +
         fmt(result.final_iterates[1].alpha[0]) + "," + fmt(result.final_iterates[2].alpha[0]) +
         ") eta=(" + fmt(result.final_iterates[0].eta) + "," + fmt(result.final_iterates[1].eta) +
         "," + fmt(result.final_iterates[2].eta) + ") disagreement=" + fmt(dis));
  return c;
}

// ---------------------------------------------------------------- criterion 3

Check criterion_metropolis() {
  Check c;
  for (const std::string name : {"G1", "G2", "G3"}) {
    const Topology topo = builtin_topology(name);
    const int n = topo.n_agents();
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd row = metropolis_row(topo, i);
      const auto& hood = topo.neighborhood(i);
      for (std::size_t k = 0; k < hood.size(); ++k) W(i, hood[k]) = row[k];
    }
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      worst = std::max(worst, std::abs(W.row(i).sum() - 1.0));
      worst = std::max(worst, std::abs(W.col(i).sum() - 1.0));
    }
    c.expect(worst <= 1e-12, name + " double stochasticity residual " + fmt(worst));
    c.expect((W.array() >= 0.0).all(), name + " has negative weights");
    c.note(name + " residual=" + fmt(worst));
  }
  return c;
}

// ---------------------------------------------------------------- criterion 4

Check criterion_max_affine() {
  Check c;
  {  // |x| with two hyperplanes is exactly representable
    Eigen::MatrixXd X(5, 1);
    Eigen::VectorXd y(5);
    const double xs[5] = {-1.0, -0.5, 0.0, 0.5, 1.0};
    for (int i = 0; i < 5; ++i) {
      X(i, 0) = xs[i];
      y[i] = std::abs(xs[i]);
    }
    FitConfig cfg;
    cfg.n_hyperplanes = 2;
    cfg.rng_seed = 11;
    const MaxAffineModel model = fit_max_affine(X, y, cfg);
    double sse = 0.0;
    for (int i = 0; i < 5; ++i) {
      const double e = model.eval(X.row(i).transpose()) - y[i];
      sse += e * e;
    }
    const double rmse = std::sqrt(sse / 5.0);
    c.expect(rmse < 1e-8, "|x| fit rmse=" + fmt(rmse));
    c.note("abs_rmse=" + fmt(rmse));
    Rng rng(404);
    c.expect(check_midpoint_convexity(model, 1000, rng), "|x| model convexity probes");
    c.expect(check_subgradient_inequality(model, 1000, rng), "|x| model subgradient probes");
  }
  {  // x^2 on a 50-point grid with 8 hyperplanes beats the interpolation bound
    const int n = 50;
    Eigen::MatrixXd X(n, 1);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      const double x = -1.0 + 2.0 * i / (n - 1);
      X(i, 0) = x;
      y[i] = x * x;
    }
    FitConfig cfg;
    cfg.n_hyperplanes = 8;
    cfg.rng_seed = 7;
    const MaxAffineModel model = fit_max_affine(X, y, cfg);
    double sse = 0.0;
    for (int i = 0; i < n; ++i) {
      const double e = model.eval(X.row(i).transpose()) - y[i];
      sse += e * e;
    }
    const double rmse = std::sqrt(sse / n);
    c.expect(rmse <= 1.0 / 128.0, "x^2 fit rmse=" + fmt(rmse) + " bound=" + fmt(1.0 / 128.0));
    c.note("square_rmse=" + fmt(rmse));
    Rng rng(405);
    c.expect(check_midpoint_convexity(model, 1000, rng), "x^2 model convexity probes");
    c.expect(check_subgradient_inequality(model, 1000, rng), "x^2 model subgradient probes");
  }
  return c;
}

// ---------------------------------------------------------------- criterion 5

Check criterion_planner_oracle() {
  Check c;
  const TabularGame chain = three_state_chain_mdp();
  const ValueIterationResult vi = value_iteration(chain);
  const int s0 = chain.state_index(0);
  const double q_star[2] = {vi.q[0](s0, 0), vi.q[0](s0, 1)};

  const auto model = make_tabular_model(chain);
  const FixedActionRollout rollout(0.0);
  const int Ls[3] = {100, 500, 2000};
  double mean_err[3] = {0.0, 0.0, 0.0};
  const int n_seeds = 5;
  for (int li = 0; li < 3; ++li) {
    for (int seed = 1; seed <= n_seeds; ++seed) {
      PlannerConfig cfg;
      cfg.n_queries = Ls[li];
      cfg.max_depth = chain.horizon;
      cfg.ucb_c = 2.0;
      cfg.rng_seed = 1000 + seed;
      const auto samples = plan(Eigen::VectorXd::Zero(1), *model, rollout, cfg);
      double worst_rel = 0.0;
      bool have[2] = {false, false};
      for (const auto& s : samples) {
        const int a = static_cast<int>(std::lround(s.action[0]));
        have[a] = true;
        worst_rel = std::max(worst_rel, std::abs(s.value - q_star[a]) / std::abs(q_star[a]));
      }
      if (!(have[0] && have[1])) worst_rel = 1.0;  // a missing action counts as failure
      mean_err[li] += worst_rel / n_seeds;
    }
  }
  c.expect(mean_err[2] < 0.05, "relative error at L=2000 is " + fmt(mean_err[2]));
  c.expect(mean_err[0] >= mean_err[1] && mean_err[1] >= mean_err[2],
           "error not decreasing: " + fmt(mean_err[0]) + " -> " + fmt(mean_err[1]) + " -> " +
               fmt(mean_err[2]));
  c.note("q*=(" + fmt(q_star[0]) + "," + fmt(q_star[1]) + ") err(L)=" + fmt(mean_err[0]) +
         "," + fmt(mean_err[1]) + "," + fmt(mean_err[2]));
  return c;
}

// ---------------------------------------------------------------- criterion 6

Check criterion_rollout_flow() {
  Check c;
  const Topology pair(2, {{0, 1}});
  const std::vector<Eigen::Vector2d> initial{{0.0, 0.0}, {0.0, 0.0}};
  const std::vector<Eigen::Vector2d> desired{{0.0, 0.0}, {1.0, 0.0}};
  RolloutConfig cfg;
  const ConvergedFlow flow = rollout_converge(initial, desired, pair, cfg);
  c.expect(flow.converged, "flow did not converge within total_time");
  const double e0 = (flow.positions[0] - Eigen::Vector2d(-0.5, 0.0)).norm();
  const double e1 = (flow.positions[1] - Eigen::Vector2d(0.5, 0.0)).norm();
  c.expect(e0 <= 1e-4, "agent 1 endpoint error " + fmt(e0));
  c.expect(e1 <= 1e-4, "agent 2 endpoint error " + fmt(e1));
  c.expect(flow.centroid_drift_rate < 1e-9,
           "centroid drift rate " + fmt(flow.centroid_drift_rate));
  c.note("endpoints=(" + fmt(flow.positions[0][0]) + "," + fmt(flow.positions[0][1]) + ")(" +
         fmt(flow.positions[1][0]) + "," + fmt(flow.positions[1][1]) +
         ") drift=" + fmt(flow.centroid_drift_rate));
  return c;
}

// ------------------------------------------------------- criteria 7, 8 and 9

struct Scenario {
  std::string name;
  std::string schedule;
  std::string formation;
};

ExperimentConfig desk_config(const Scenario& sc, Algorithm algo, std::uint64_t seed,
                             int n_threads) {
  ExperimentConfig cfg;
  cfg.name = sc.name;
  cfg.schedule = builtin_schedule(sc.schedule);
  cfg.algorithm = algo;
  cfg.horizon = 30;
  cfg.discount = 1.0;
  cfg.planner.n_queries = 50;
  cfg.planner.max_depth = 5;
  cfg.planner.ucb_c = 25.0;
  cfg.fit.n_hyperplanes = 8;
  cfg.optimizer.n_iters = 500;
  cfg.optimizer.step.beta0 = 0.001;
  cfg.optimizer.step.exponent = 0.8;
  cfg.optimizer.r_scale = 2.0;
  cfg.seed = seed;
  cfg.seed_set = true;
  cfg.n_threads = n_threads;
  return cfg;
}

struct EndToEndState {
  bool ran = false;
  Check check7;
  AccessAudit audit;
  std::string rerun_csv_a, rerun_csv_b;
};

void run_end_to_end(EndToEndState& st, const SelfCheckOptions& opts, std::ostream& log) {
  if (st.ran) return;
  st.ran = true;
  Check& c = st.check7;
  const Scenario scenarios[3] = {
      {"g1", "G1", "pentagon"},
      {"switching", "switching", "pentagon"},
      {"g3", "G3", "octagon"},
  };
  const std::uint64_t seeds[3] = {1, 2, 3};

  for (const auto& sc : scenarios) {
    const FormationSpec spec = builtin_formation(sc.formation);
    const FormationEnvironment env(spec, builtin_initial_positions(spec.n_agents()),
                                   RolloutConfig{});
    std::vector<RunRecord> records;

    RunRecord optimal_record;
    bool have_optimal = false;
    if (sc.name == "g1") {
      ExperimentConfig cfg = desk_config(sc, Algorithm::Optimal, seeds[0], opts.n_threads);
      optimal_record = run_experiment(cfg, env, &st.audit);
      have_optimal = true;
      records.push_back(optimal_record);
      log << "    [" << sc.name << "] optimal: final worst inst = "
          << fmt(optimal_record.final_worst_instantaneous())
          << ", worst cumulative = " << fmt(optimal_record.worst_cumulative()) << "\n";
    }

    for (std::uint64_t seed : seeds) {
      ExperimentConfig proposed_cfg = desk_config(sc, Algorithm::Proposed, seed, opts.n_threads);
      const RunRecord proposed = run_experiment(proposed_cfg, env, &st.audit);
      ExperimentConfig pomcpow_cfg =
          desk_config(sc, Algorithm::PomcpowBaseline, seed, opts.n_threads);
      const RunRecord pomcpow = run_experiment(pomcpow_cfg, env, &st.audit);
      ExperimentConfig rollout_cfg =
          desk_config(sc, Algorithm::RolloutBaseline, seed, opts.n_threads);
      const RunRecord rollout = run_experiment(rollout_cfg, env, &st.audit);

      log << "    [" << sc.name << " seed " << seed
          << "] worst cumulative: proposed=" << fmt(proposed.worst_cumulative())
          << " pomcpow=" << fmt(pomcpow.worst_cumulative())
          << " rollout=" << fmt(rollout.worst_cumulative())
          << " | final worst inst proposed=" << fmt(proposed.final_worst_instantaneous())
          << "\n";

      const std::string tag = sc.name + " seed " + std::to_string(seed);
      c.expect(proposed.worst_cumulative() > pomcpow.worst_cumulative(),
               tag + ": proposed (" + fmt(proposed.worst_cumulative()) +
                   ") not above pomcpow baseline (" + fmt(pomcpow.worst_cumulative()) + ")");
      c.expect(proposed.worst_cumulative() > rollout.worst_cumulative(),
               tag + ": proposed (" + fmt(proposed.worst_cumulative()) +
                   ") not above rollout baseline (" + fmt(rollout.worst_cumulative()) + ")");
      if (have_optimal) {
        const double gap = std::abs(proposed.final_worst_instantaneous() -
                                    optimal_record.final_worst_instantaneous());
        c.expect(gap <= 0.5, tag + ": final worst-agent reward is " + fmt(gap) +
                                 " from the optimal steady state (allowed 0.5)");
      }

      records.push_back(proposed);
      records.push_back(pomcpow);
      records.push_back(rollout);

      if (sc.name == "g1" && seed == seeds[0]) {
        st.rerun_csv_a = run_record_csv(proposed);
        ExperimentConfig again = desk_config(sc, Algorithm::Proposed, seed, 1);
        st.rerun_csv_b = run_record_csv(run_experiment(again, env, nullptr));
      }
    }
    write_report(records, opts.out_dir + "/" + sc.name);
  }
  c.note("reports under " + opts.out_dir);
}

}  // namespace

bool all_passed(const std::vector<CriterionResult>& results) {
  for (const auto& r : results)
    if (!r.passed) return false;
  return true;
}

std::vector<CriterionResult> run_acceptance_criteria(const SelfCheckOptions& opts,
                                                     std::ostream& log) {
  EndToEndState e2e;

  struct Entry {
    int id;
    std::string name;
    double budget_seconds;
    std::function<Check()> fn;
  };
  const std::vector<Entry> entries = {
      {1, "stage-wise DP counterexample (greedy 95 vs optimal 205)", 1.0,
       [] { return criterion_dp_counterexample(); }},
      {2, "distributed optimizer reaches the analytic min-max point", 10.0,
       [] { return criterion_optimizer_fixture(); }},
      {3, "Metropolis weights doubly stochastic on G1/G2/G3", 5.0,
       [] { return criterion_metropolis(); }},
      {4, "max-affine regression identities, bound and probes", 5.0,
       [] { return criterion_max_affine(); }},
      {5, "planner matches value iteration on the chain fixture", 30.0,
       [] { return criterion_planner_oracle(); }},
      {6, "consensus flow endpoint and centroid conservation", 5.0,
       [] { return criterion_rollout_flow(); }},
      {7, "desk-scale ordering vs baselines and optimal gap", 900.0,
       [&] {
         run_end_to_end(e2e, opts, log);
         return e2e.check7;
       }},
      {8, "locality audit clean across the simulation suite", 900.0,
       [&] {
         run_end_to_end(e2e, opts, log);
         Check c;
         c.expect(e2e.audit.total_accesses() > 0, "audit saw no accesses (vacuous)");
         c.expect(e2e.audit.clean(),
                  std::to_string(e2e.audit.violations().size()) + " non-neighbor accesses");
         c.note("accesses=" + std::to_string(e2e.audit.total_accesses()) +
                " violations=" + std::to_string(e2e.audit.violations().size()));
         return c;
       }},
      {9, "seed-fixed rerun reproduces the run CSV bit for bit", 900.0,
       [&] {
         run_end_to_end(e2e, opts, log);
         Check c;
         c.expect(!e2e.rerun_csv_a.empty(), "no baseline CSV captured");
         c.expect(e2e.rerun_csv_a == e2e.rerun_csv_b, "rerun CSV differs");
         c.note("csv bytes=" + std::to_string(e2e.rerun_csv_a.size()));
         return c;
       }},
  };

  std::vector<CriterionResult> results;
  for (const auto& entry : entries) {
    if (opts.only != 0 && entry.id != opts.only) continue;
    if (!opts.include_end_to_end && entry.id >= 7) {
      log << "[SKIP] criterion " << entry.id << ": " << entry.name << " (quick mode)\n";
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    r.id = entry.id;
    r.name = entry.name;
    try {
      Check c = entry.fn();
      r.passed = c.ok;
      r.detail = c.detail;
    } catch (const std::exception& err) {
      r.passed = false;
      r.detail = std::string("exception: ") + err.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (r.passed && r.seconds > entry.budget_seconds) {
      r.passed = false;
      r.detail += "; exceeded runtime budget of " + fmt(entry.budget_seconds) + " s";
    }
    char line[160];
    std::snprintf(line, sizeof(line), "[%s] criterion %d: %s (%.2f s)",
                  r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds);
    log << line << "\n";
    if (!r.detail.empty()) log << "       " << r.detail << "\n";
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace maxmin
