#include "maxmin/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "maxmin/rng.hpp"

namespace maxmin {

namespace {

/// Max-affine surrogate over the neighborhood action coordinates, lifted to
/// the joint action space: coordinates outside the neighborhood carry zero
/// weight, so the objective stays a function the owning agent can evaluate.
class LiftedMaxAffine final : public LocalObjective {
 public:
  LiftedMaxAffine(MaxAffineModel model, std::vector<int> coord_map, int joint_dim)
      : model_(std::move(model)), coord_map_(std::move(coord_map)), joint_dim_(joint_dim) {
    if (static_cast<int>(coord_map_.size()) != model_.input_dim())
      throw std::invalid_argument("LiftedMaxAffine: coordinate map size mismatch");
  }

  double value(const Eigen::VectorXd& alpha) const override {
    return model_.eval(gather(alpha));
  }

  Eigen::VectorXd subgradient(const Eigen::VectorXd& alpha) const override {
    const Eigen::VectorXd local = model_.subgradient(gather(alpha));
    Eigen::VectorXd g = Eigen::VectorXd::Zero(joint_dim_);
    for (int c = 0; c < local.size(); ++c) g[coord_map_[c]] = local[c];
    return g;
  }

 private:
  Eigen::VectorXd gather(const Eigen::VectorXd& alpha) const {
    Eigen::VectorXd x(coord_map_.size());
    for (std::size_t c = 0; c < coord_map_.size(); ++c) x[c] = alpha[coord_map_[c]];
    return x;
  }

  MaxAffineModel model_;
  std::vector<int> coord_map_;
  int joint_dim_;
};

struct JointLayout {
  std::vector<int> offset;  // per agent, into the flat joint action vector
  std::vector<int> dim;
  Box box;
  int total = 0;
};

JointLayout joint_layout(const Environment& env) {
  JointLayout layout;
  const int n = env.n_agents();
  layout.offset.resize(n);
  layout.dim.resize(n);
  Eigen::VectorXd lo(0), hi(0);
  int total = 0;
  for (int i = 0; i < n; ++i) {
    layout.offset[i] = total;
    layout.dim[i] = env.action_dim(i);
    total += layout.dim[i];
  }
  layout.total = total;
  Eigen::VectorXd full_lo(total), full_hi(total);
  for (int i = 0; i < n; ++i) {
    const Box b = env.action_box(i);
    full_lo.segment(layout.offset[i], layout.dim[i]) = b.lo;
    full_hi.segment(layout.offset[i], layout.dim[i]) = b.hi;
  }
  layout.box = Box(full_lo, full_hi);
  return layout;
}

void parallel_over_agents(int n, int n_threads, const std::function<void(int)>& body) {
  if (n_threads <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  const int workers = std::min(n_threads, n);
  std::vector<std::exception_ptr> errors(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct Recorder {
  RunRecord record;
  std::vector<double> cumulative;
  double gamma_pow = 1.0;

  Recorder(const std::string& algo, std::uint64_t seed, int n) {
    record.algorithm = algo;
    record.seed = seed;
    record.n_agents = n;
    cumulative.assign(n, 0.0);
  }

  void push(const std::vector<double>& rewards, JointAction action, double gamma,
            double wall_ms) {
    TimestepRecord ts;
    ts.instantaneous = rewards;
    for (std::size_t i = 0; i < rewards.size(); ++i) cumulative[i] += gamma_pow * rewards[i];
    gamma_pow *= gamma;
    ts.cumulative = cumulative;
    ts.worst_instantaneous = *std::min_element(rewards.begin(), rewards.end());
    ts.action = std::move(action);
    ts.wall_ms = wall_ms;
    record.steps.push_back(std::move(ts));
  }
};

JointAction clip_joint(const Environment& env, JointAction a) {
  for (int i = 0; i < env.n_agents(); ++i)
    a.per_agent[i] = env.action_box(i).clip(a.per_agent[i]);
  return a;
}

RunRecord run_proposed(const ExperimentConfig& cfg, const Environment& env,
                       AccessAudit* audit) {
  const int n = env.n_agents();
  const SeedStream seeds(cfg.seed);
  const JointLayout layout = joint_layout(env);
  Recorder rec(algorithm_name(cfg.algorithm), cfg.seed, n);

  JointState state = env.initial_state();
  double gamma_pow = 1.0;

  for (int t = 0; t < cfg.horizon; ++t) {
    const auto t0 = std::chrono::steady_clock::now();
    const Topology& topo = cfg.schedule.at(t);

    std::vector<std::unique_ptr<LocalObjective>> objectives(n);
    std::vector<std::exception_ptr> agent_errors(n);

    parallel_over_agents(n, cfg.n_threads, [&](int i) {
      try {
        const auto& members = topo.neighborhood(i);
        if (audit)
          for (int m : members) audit->record(topo, i, m, "state", t);
        const Eigen::VectorXd root = flatten(project(state.per_agent, members));

        auto model = env.local_model(topo, i, cfg.discount, cfg.horizon - t);
        auto rollout = env.local_rollout(topo, i);
        PlannerConfig pcfg = cfg.planner;
        pcfg.max_depth = std::min(pcfg.max_depth, cfg.horizon - t);
        pcfg.rng_seed = seeds.derive("plan", t, i);
        const std::vector<QSample> samples = plan(root, *model, *rollout, pcfg);

        const int n_samples = static_cast<int>(samples.size());
        const int dim = model->action_dim();
        Eigen::MatrixXd X(n_samples, dim);
        Eigen::VectorXd y(n_samples);
        for (int s = 0; s < n_samples; ++s) {
          X.row(s) = samples[s].action.transpose();
          y[s] = -samples[s].value;  // costs
        }

        FitConfig fcfg = cfg.fit;
        fcfg.n_hyperplanes = std::min(fcfg.n_hyperplanes, n_samples);
        fcfg.rng_seed = seeds.derive("fit", t, i);
        MaxAffineModel surrogate = fit_max_affine(X, y, fcfg);
        // f_i = gamma^t * (-Qhat) + (-Rbar_{t-1})
        surrogate = surrogate.scaled_by(gamma_pow).offset_by(-rec.cumulative[i]);

        std::vector<int> coord_map;
        coord_map.reserve(dim);
        for (int m : members)
          for (int c = 0; c < layout.dim[m]; ++c) coord_map.push_back(layout.offset[m] + c);
        objectives[i] =
            std::make_unique<LiftedMaxAffine>(std::move(surrogate), std::move(coord_map),
                                              layout.total);
      } catch (...) {
        agent_errors[i] = std::current_exception();
      }
    });
    for (int i = 0; i < n; ++i) {
      if (agent_errors[i]) {
        try {
          std::rethrow_exception(agent_errors[i]);
        } catch (const std::exception& err) {
          throw HarnessError("timestep " + std::to_string(t) + ", agent " +
                             std::to_string(i + 1) + ": " + err.what());
        }
      }
    }

    OptimizerConfig ocfg = cfg.optimizer;
    ocfg.rng_seed = seeds.derive("optimizer", t);
    ocfg.record_trace = false;
    ocfg.n_agents_known = n;
    std::vector<const LocalObjective*> objective_ptrs;
    for (const auto& o : objectives) objective_ptrs.push_back(o.get());
    std::vector<AgentIterate> init;
    init.reserve(n);
    const Eigen::VectorXd center = layout.box.center();
    for (int i = 0; i < n; ++i) init.emplace_back(center, objectives[i]->value(center));

    ConsensusRunResult opt = run_consensus_minmax(TopologySchedule(topo), objective_ptrs,
                                                  ocfg, layout.box, std::move(init), audit);

    JointAction action;
    action.per_agent.resize(n);
    for (int i = 0; i < n; ++i)
      action.per_agent[i] =
          opt.final_iterates[i].alpha.segment(layout.offset[i], layout.dim[i]);
    action = clip_joint(env, std::move(action));

    auto [next_state, rewards] = env.step(state, action, topo);
    state = std::move(next_state);
    gamma_pow *= cfg.discount;  // mirrors the recorder's power

    const double wall =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    rec.push(rewards, std::move(action), cfg.discount, wall);
  }
  return rec.record;
}

RunRecord run_baseline_rollout(const ExperimentConfig& cfg, const Environment& env,
                               AccessAudit* audit) {
  const int n = env.n_agents();
  Recorder rec(algorithm_name(cfg.algorithm), cfg.seed, n);
  JointState state = env.initial_state();
  for (int t = 0; t < cfg.horizon; ++t) {
    const auto t0 = std::chrono::steady_clock::now();
    const Topology& topo = cfg.schedule.at(t);
    if (audit) {  // the flow integration exchanges states along edges only
      for (int i = 0; i < n; ++i)
        for (int j : topo.neighborhood(i)) audit->record(topo, i, j, "ode_state", t);
    }
    JointAction action = clip_joint(env, env.baseline_rollout_actions(state, topo));
    auto [next_state, rewards] = env.step(state, action, topo);
    state = std::move(next_state);
    const double wall =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    rec.push(rewards, std::move(action), cfg.discount, wall);
  }
  return rec.record;
}

RunRecord run_baseline_pomcpow(const ExperimentConfig& cfg, const Environment& env,
                               AccessAudit* audit) {
  const int n = env.n_agents();
  const SeedStream seeds(cfg.seed);
  const JointLayout layout = joint_layout(env);
  Recorder rec(algorithm_name(cfg.algorithm), cfg.seed, n);
  JointState state = env.initial_state();

  for (int t = 0; t < cfg.horizon; ++t) {
    const auto t0 = std::chrono::steady_clock::now();
    const Topology& topo = cfg.schedule.at(t);
    JointAction action;
    action.per_agent.resize(n);
    std::vector<std::exception_ptr> agent_errors(n);

    parallel_over_agents(n, cfg.n_threads, [&](int i) {
      try {
        const auto& members = topo.neighborhood(i);
        if (audit)
          for (int m : members) audit->record(topo, i, m, "state", t);
        const Eigen::VectorXd root = flatten(project(state.per_agent, members));
        auto model = env.local_model(topo, i, cfg.discount, cfg.horizon - t);
        auto rollout = env.local_rollout(topo, i);
        PlannerConfig pcfg = cfg.planner;
        pcfg.max_depth = std::min(pcfg.max_depth, cfg.horizon - t);
        pcfg.rng_seed = seeds.derive("plan", t, i);  // paired with the proposed run
        const std::vector<QSample> samples = plan(root, *model, *rollout, pcfg);

        int best = 0;
        for (int s = 1; s < static_cast<int>(samples.size()); ++s)
          if (samples[s].value > samples[best].value) best = s;
        // own coordinates within the ascending member order
        int pos = 0;
        int coord = 0;
        for (int m : members) {
          if (m == i) break;
          coord += layout.dim[m];
          ++pos;
        }
        action.per_agent[i] = samples[best].action.segment(coord, layout.dim[i]);
      } catch (...) {
        agent_errors[i] = std::current_exception();
      }
    });
    for (int i = 0; i < n; ++i) {
      if (agent_errors[i]) {
        try {
          std::rethrow_exception(agent_errors[i]);
        } catch (const std::exception& err) {
          throw HarnessError("timestep " + std::to_string(t) + ", agent " +
                             std::to_string(i + 1) + ": " + err.what());
        }
      }
    }

    action = clip_joint(env, std::move(action));
    auto [next_state, rewards] = env.step(state, action, topo);
    state = std::move(next_state);
    const double wall =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    rec.push(rewards, std::move(action), cfg.discount, wall);
  }
  return rec.record;
}

RunRecord run_optimal(const ExperimentConfig& cfg, const Environment& env) {
  const int n = env.n_agents();
  Recorder rec(algorithm_name(cfg.algorithm), cfg.seed, n);
  JointState state = env.initial_state();
  const std::vector<JointAction> plan = env.optimal_plan(cfg.schedule, cfg.horizon);
  if (static_cast<int>(plan.size()) != cfg.horizon)
    throw HarnessError("optimal plan length does not match the horizon");
  for (int t = 0; t < cfg.horizon; ++t) {
    const auto t0 = std::chrono::steady_clock::now();
    const Topology& topo = cfg.schedule.at(t);
    JointAction action = clip_joint(env, plan[t]);
    auto [next_state, rewards] = env.step(state, action, topo);
    state = std::move(next_state);
    const double wall =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    rec.push(rewards, std::move(action), cfg.discount, wall);
  }
  return rec.record;
}

}  // namespace

std::string algorithm_name(Algorithm algo) {
  switch (algo) {
    case Algorithm::Proposed: return "proposed";
    case Algorithm::RolloutBaseline: return "rollout_baseline";
    case Algorithm::PomcpowBaseline: return "pomcpow_baseline";
    case Algorithm::Optimal: return "optimal";
  }
  throw std::logic_error("algorithm_name: bad enum");
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "proposed") return Algorithm::Proposed;
  if (name == "rollout_baseline") return Algorithm::RolloutBaseline;
  if (name == "pomcpow_baseline") return Algorithm::PomcpowBaseline;
  if (name == "optimal") return Algorithm::Optimal;
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

void ExperimentConfig::validate(const Environment& env) const {
  if (!seed_set) throw std::invalid_argument("ExperimentConfig: seed is mandatory");
  if (horizon < 0) throw std::invalid_argument("ExperimentConfig: horizon >= 0");
  if (!(discount > 0.0 && discount <= 1.0))
    throw std::invalid_argument("ExperimentConfig: discount in (0, 1]");
  if (schedule.n_agents() != env.n_agents())
    throw std::invalid_argument("ExperimentConfig: schedule/environment agent count mismatch");
  planner.validate();
  fit.validate();
  optimizer.validate();
  if (n_threads < 1) throw std::invalid_argument("ExperimentConfig: n_threads >= 1");
}

double RunRecord::worst_cumulative() const {
  if (steps.empty()) return 0.0;
  const auto& last = steps.back().cumulative;
  return *std::min_element(last.begin(), last.end());
}

double RunRecord::final_worst_instantaneous() const {
  if (steps.empty()) return 0.0;
  return steps.back().worst_instantaneous;
}

RunRecord run_experiment(const ExperimentConfig& cfg, const Environment& env,
                         AccessAudit* audit) {
  cfg.validate(env);
  switch (cfg.algorithm) {
    case Algorithm::Proposed: return run_proposed(cfg, env, audit);
    case Algorithm::RolloutBaseline: return run_baseline_rollout(cfg, env, audit);
    case Algorithm::PomcpowBaseline: return run_baseline_pomcpow(cfg, env, audit);
    case Algorithm::Optimal: return run_optimal(cfg, env);
  }
  throw std::logic_error("run_experiment: bad algorithm enum");
}

std::string run_record_csv(const RunRecord& record) {
  std::ostringstream out;
  out << "# run_record_csv v1 algorithm=" << record.algorithm << " seed=" << record.seed
      << "\n";
  out << "timestep,agent,reward,cumulative,worst_flag\n";
  char buf[128];
  for (int t = 0; t < static_cast<int>(record.steps.size()); ++t) {
    const auto& ts = record.steps[t];
    const double worst = *std::min_element(ts.instantaneous.begin(), ts.instantaneous.end());
    for (int i = 0; i < record.n_agents; ++i) {
      std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%d\n", t, i + 1, ts.instantaneous[i],
                    ts.cumulative[i], ts.instantaneous[i] == worst ? 1 : 0);
      out << buf;
    }
  }
  return out.str();
}

void write_run_outputs(const RunRecord& record, const ExperimentConfig& cfg,
                       const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("write_run_outputs: cannot create " + dir);

  {
    std::ofstream out(fs::path(dir) / "run.csv", std::ios::binary);
    if (!out) throw std::runtime_error("write_run_outputs: cannot write run.csv in " + dir);
    out << run_record_csv(record);
  }
  {
    nlohmann::json meta;
    meta["algorithm"] = record.algorithm;
    meta["seed"] = record.seed;
    meta["n_agents"] = record.n_agents;
    meta["horizon"] = static_cast<int>(record.steps.size());
    meta["name"] = cfg.name;
    meta["worst_cumulative"] = record.worst_cumulative();
    meta["final_worst_instantaneous"] = record.final_worst_instantaneous();
    double wall = 0.0;
    for (const auto& ts : record.steps) wall += ts.wall_ms;
    meta["wall_ms_total"] = wall;
    std::ofstream out(fs::path(dir) / "meta.json");
    out << meta.dump(2) << "\n";
  }
}

RunRecord run_record_from_csv(const std::string& csv_text) {
  RunRecord record;
  std::istringstream in(csv_text);
  std::string line;
  int max_agent = 0;
  std::vector<std::tuple<int, int, double, double>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') {
      // header comment: recover algorithm/seed labels when present
      const auto apos = line.find("algorithm=");
      if (apos != std::string::npos) {
        const auto end = line.find(' ', apos);
        record.algorithm = line.substr(apos + 10, end - apos - 10);
      }
      const auto spos = line.find("seed=");
      if (spos != std::string::npos) record.seed = std::stoull(line.substr(spos + 5));
      continue;
    }
    if (line.rfind("timestep,", 0) == 0) continue;
    int t, agent, flag;
    double reward, cumulative;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%d", &t, &agent, &reward, &cumulative,
                    &flag) != 5)
      throw std::runtime_error("run_record_from_csv: malformed row: " + line);
    rows.emplace_back(t, agent, reward, cumulative);
    max_agent = std::max(max_agent, agent);
  }
  record.n_agents = max_agent;
  for (const auto& [t, agent, reward, cumulative] : rows) {
    if (t >= static_cast<int>(record.steps.size())) {
      record.steps.resize(t + 1);
      record.steps[t].instantaneous.assign(max_agent, 0.0);
      record.steps[t].cumulative.assign(max_agent, 0.0);
    }
    record.steps[t].instantaneous[agent - 1] = reward;
    record.steps[t].cumulative[agent - 1] = cumulative;
  }
  for (auto& ts : record.steps)
    ts.worst_instantaneous =
        *std::min_element(ts.instantaneous.begin(), ts.instantaneous.end());
  return record;
}

}  // namespace maxmin
