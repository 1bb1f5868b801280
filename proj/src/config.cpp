#include "maxmin/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace maxmin {

namespace {

using nlohmann::json;

int line_of_byte(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

/// Best-effort line lookup for a key name (first occurrence of "key").
int line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  if (pos == std::string::npos) return -1;
  return line_of_byte(text, pos);
}

class Reader {
 public:
  Reader(const json& root, const std::string& text, const std::string& origin)
      : root_(root), text_(text), origin_(origin) {}

  const json* find(const json& obj, const std::string& key) const {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    const int line = line_of_key(text_, key);
    std::ostringstream msg;
    msg << origin_;
    if (line > 0) msg << ":" << line;
    msg << ": key '" << key << "': " << why;
    throw ConfigError(msg.str());
  }

  template <typename T>
  T get(const json& obj, const std::string& key, const T& fallback) const {
    const json* v = find(obj, key);
    if (!v) return fallback;
    try {
      return v->get<T>();
    } catch (const json::exception& e) {
      fail(key, std::string("wrong type (") + e.what() + ")");
    }
  }

  template <typename T>
  T require(const json& obj, const std::string& key) const {
    const json* v = find(obj, key);
    if (!v) fail(key, "missing required entry");
    try {
      return v->get<T>();
    } catch (const json::exception& e) {
      fail(key, std::string("wrong type (") + e.what() + ")");
    }
  }

  const json& root() const { return root_; }

 private:
  const json& root_;
  const std::string& text_;
  std::string origin_;
};

Topology topology_from_json(const Reader& r, const json& node) {
  if (node.contains("name")) return builtin_topology(node.at("name").get<std::string>());
  const int n = r.require<int>(node, "n_agents");
  auto edges1 = r.require<std::vector<std::vector<int>>>(node, "edges");
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : edges1) {
    if (e.size() != 2) r.fail("edges", "each edge must be a [i, j] pair (1-based labels)");
    edges.emplace_back(e[0] - 1, e[1] - 1);  // configs use 1-based agent labels
  }
  return Topology(n, edges);
}

TopologySchedule schedule_from_json(const Reader& r, const json& node) {
  if (node.contains("schedule")) {
    std::vector<TopologySchedule::Entry> entries;
    for (const auto& item : node.at("schedule")) {
      TopologySchedule::Entry e{topology_from_json(r, item), r.require<int>(item, "steps")};
      entries.push_back(std::move(e));
    }
    return TopologySchedule(std::move(entries), r.get<bool>(node, "cyclic", true));
  }
  if (node.contains("name")) {
    const std::string name = node.at("name").get<std::string>();
    try {
      return builtin_schedule(name, r.get<int>(node, "switch_period", 10));
    } catch (const std::invalid_argument& e) {
      r.fail("name", e.what());
    }
  }
  return TopologySchedule(topology_from_json(r, node));
}

}  // namespace

LoadedExperiment load_experiment_text(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ":" + std::to_string(line_of_byte(text, e.byte)) +
                      ": JSON parse error: " + e.what());
  }
  Reader r(root, text, origin);

  LoadedExperiment out;
  ExperimentConfig& cfg = out.config;

  const json* topo_node = r.find(root, "topology");
  if (!topo_node) r.fail("topology", "missing required section");
  cfg.schedule = schedule_from_json(r, *topo_node);
  const int n = cfg.schedule.n_agents();

  // formation section: builtin name or explicit desired positions (1 row per agent)
  FormationSpec spec;
  if (const json* f = r.find(root, "formation")) {
    if (f->contains("name")) {
      spec = builtin_formation(f->at("name").get<std::string>());
    } else {
      auto rows = r.require<std::vector<std::vector<double>>>(*f, "desired");
      for (const auto& row : rows) {
        if (row.size() != 2) r.fail("desired", "each entry must be [x, y]");
        spec.desired.emplace_back(row[0], row[1]);
      }
    }
    spec.ordered_pairs = r.get<bool>(*f, "ordered_pairs", false);
  } else {
    r.fail("formation", "missing required section");
  }
  if (spec.n_agents() != n)
    r.fail("formation", "formation size " + std::to_string(spec.n_agents()) +
                            " does not match topology n_agents " + std::to_string(n));

  std::vector<Eigen::Vector2d> initial;
  if (const json* init = r.find(root, "initial_state")) {
    auto rows = init->get<std::vector<std::vector<double>>>();
    for (const auto& row : rows) {
      if (row.size() != 2) r.fail("initial_state", "each entry must be [x, y]");
      initial.emplace_back(row[0], row[1]);
    }
    if (static_cast<int>(initial.size()) != n)
      r.fail("initial_state", "needs one [x, y] entry per agent");
  } else {
    try {
      initial = builtin_initial_positions(n);
    } catch (const std::invalid_argument&) {
      r.fail("initial_state",
             "required: no built-in start positions for " + std::to_string(n) + " agents");
    }
  }

  RolloutConfig rollout;
  if (const json* ro = r.find(root, "rollout")) {
    rollout.euler_dt = r.get<double>(*ro, "dt", rollout.euler_dt);
    rollout.total_time = r.get<double>(*ro, "total_time", rollout.total_time);
    rollout.convergence_tol = r.get<double>(*ro, "tol", rollout.convergence_tol);
    rollout.lookahead_iters = r.get<int>(*ro, "lookahead_iters", rollout.lookahead_iters);
  }

  const json* run = r.find(root, "run");
  if (!run) r.fail("run", "missing required section");
  cfg.name = r.get<std::string>(*run, "name", "run");
  cfg.algorithm = algorithm_from_name(r.get<std::string>(*run, "algorithm", "proposed"));
  cfg.horizon = r.require<int>(*run, "horizon");
  cfg.discount = r.get<double>(*run, "discount", 1.0);
  if (!run->contains("seed")) r.fail("seed", "missing required entry (seed is mandatory)");
  cfg.seed = r.require<std::uint64_t>(*run, "seed");
  cfg.seed_set = true;
  cfg.out_dir = r.get<std::string>(*run, "out_dir", "");
  cfg.n_threads = r.get<int>(*run, "n_threads", 1);

  if (const json* p = r.find(root, "planner")) {
    cfg.planner.n_queries = r.get<int>(*p, "n_queries", cfg.planner.n_queries);
    cfg.planner.max_depth = r.get<int>(*p, "max_depth", cfg.planner.max_depth);
    cfg.planner.ucb_c = r.get<double>(*p, "ucb_c", cfg.planner.ucb_c);
    cfg.planner.k_action = r.get<double>(*p, "k_action", cfg.planner.k_action);
    cfg.planner.alpha_action = r.get<double>(*p, "alpha_action", cfg.planner.alpha_action);
    cfg.planner.k_outcome = r.get<double>(*p, "k_outcome", cfg.planner.k_outcome);
    cfg.planner.alpha_outcome = r.get<double>(*p, "alpha_outcome", cfg.planner.alpha_outcome);
  }
  if (const json* f = r.find(root, "fit")) {
    cfg.fit.n_hyperplanes = r.get<int>(*f, "n_hyperplanes", cfg.fit.n_hyperplanes);
    cfg.fit.ensemble_size = r.get<int>(*f, "ensemble_size", cfg.fit.ensemble_size);
    cfg.fit.lspa_iters = r.get<int>(*f, "lspa_iters", cfg.fit.lspa_iters);
    cfg.fit.improvement_rounds =
        r.get<int>(*f, "improvement_rounds", cfg.fit.improvement_rounds);
    cfg.fit.validation_fraction =
        r.get<double>(*f, "validation_fraction", cfg.fit.validation_fraction);
  }
  if (const json* o = r.find(root, "optimizer")) {
    cfg.optimizer.n_iters = r.get<long long>(*o, "iters", cfg.optimizer.n_iters);
    cfg.optimizer.step.beta0 = r.get<double>(*o, "step_beta0", cfg.optimizer.step.beta0);
    cfg.optimizer.step.exponent =
        r.get<double>(*o, "step_exponent", cfg.optimizer.step.exponent);
    cfg.optimizer.r_scale = r.get<double>(*o, "r_scale", cfg.optimizer.r_scale);
    const std::string noise = r.get<std::string>(*o, "noise", "zero");
    if (noise == "zero") {
      cfg.optimizer.noise.kind = NoiseSpec::Kind::Zero;
    } else if (noise == "gaussian") {
      cfg.optimizer.noise.kind = NoiseSpec::Kind::Gaussian;
      cfg.optimizer.noise.sigma = r.get<double>(*o, "noise_sigma", 0.0);
    } else {
      r.fail("noise", "must be 'zero' or 'gaussian'");
    }
    const std::string weights = r.get<std::string>(*o, "weights", "metropolis");
    if (weights != "metropolis") r.fail("weights", "only 'metropolis' is supported");
  }

  out.environment = std::make_unique<FormationEnvironment>(spec, initial, rollout);
  try {
    cfg.validate(*out.environment);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return out;
}

LoadedExperiment load_experiment_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_experiment_text(buf.str(), path);
}

std::string config_schema_help() {
  return R"(Experiment config (JSON, one section per module):

{
  "topology":  {"name": "G1" | "G2" | "G3" | "switching", "switch_period": 10}
               or {"n_agents": N, "edges": [[1,2], ...]}          (1-based labels)
               or {"schedule": [{"name": "G1", "steps": 10}, ...], "cyclic": true},
  "formation": {"name": "pentagon" | "octagon"}
               or {"desired": [[x, y], ...]},                     (one row per agent)
  "initial_state": [[x, y], ...],                                 (optional; built-in default)
  "run":       {"algorithm": "proposed" | "rollout_baseline" | "pomcpow_baseline" | "optimal",
                "horizon": 30, "discount": 1.0, "seed": 7,        (seed is mandatory)
                "out_dir": "out", "n_threads": 1, "name": "label"},
  "planner":   {"n_queries": 50, "max_depth": 5, "ucb_c": 25.0,
                "k_action": 2.0, "alpha_action": 0.5, "k_outcome": 0.0, "alpha_outcome": 0.5},
  "fit":       {"n_hyperplanes": 8, "ensemble_size": 4, "lspa_iters": 20,
                "improvement_rounds": 2, "validation_fraction": 0.2},
  "optimizer": {"iters": 500, "step_beta0": 1.0, "step_exponent": 1.0, "r_scale": 2.0,
                "noise": "zero" | "gaussian", "noise_sigma": 0.0, "weights": "metropolis"},
  "rollout":   {"dt": 0.05, "total_time": 50.0, "tol": 1e-6, "lookahead_iters": 200}
}
)";
}

}  // namespace maxmin
