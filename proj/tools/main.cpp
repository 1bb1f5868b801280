// Command-line experiment runner: run one experiment from a config file,
// compare finished runs, or execute the verification suite.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "maxmin/config.hpp"
#include "maxmin/harness.hpp"
#include "maxmin/selfcheck.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int cmd_run(const std::string& config_path, const std::string& algo_override,
            long long seed_override, const std::string& out_override) {
  maxmin::LoadedExperiment loaded;
  try {
    loaded = maxmin::load_experiment_file(config_path);
    if (!algo_override.empty())
      loaded.config.algorithm = maxmin::algorithm_from_name(algo_override);
    if (seed_override >= 0) loaded.config.seed = static_cast<std::uint64_t>(seed_override);
    if (!out_override.empty()) loaded.config.out_dir = out_override;
    if (loaded.config.out_dir.empty())
      loaded.config.out_dir = "out_" + maxmin::algorithm_name(loaded.config.algorithm);
    loaded.config.validate(*loaded.environment);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    maxmin::AccessAudit audit;
    const maxmin::RunRecord record =
        maxmin::run_experiment(loaded.config, *loaded.environment, &audit);
    maxmin::write_run_outputs(record, loaded.config, loaded.config.out_dir);
    maxmin::write_report({record}, loaded.config.out_dir);
    std::cout << "run complete: algorithm=" << record.algorithm << " seed=" << record.seed
              << "\n  worst-agent cumulative reward: " << record.worst_cumulative()
              << "\n  final worst-agent instantaneous reward: "
              << record.final_worst_instantaneous()
              << "\n  locality audit: " << audit.total_accesses() << " accesses, "
              << audit.violations().size() << " violations"
              << "\n  outputs in " << loaded.config.out_dir << "\n";
    if (!audit.clean()) return kExitRuntime;
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_compare(const std::vector<std::string>& run_dirs, const std::string& out_dir) {
  try {
    std::vector<maxmin::RunRecord> records;
    for (const auto& dir : run_dirs) {
      const auto path = std::filesystem::path(dir) / "run.csv";
      std::ifstream in(path, std::ios::binary);
      if (!in) {
        std::cerr << "config error: missing " << path.string() << "\n";
        return kExitConfig;
      }
      std::ostringstream buf;
      buf << in.rdbuf();
      records.push_back(maxmin::run_record_from_csv(buf.str()));
    }
    maxmin::write_report(records, out_dir);
    std::cout << "comparison written to " << out_dir << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

int cmd_verify(bool full, const std::string& out_dir, int threads, int only) {
  maxmin::SelfCheckOptions opts;
  opts.include_end_to_end = full;
  opts.out_dir = out_dir;
  opts.n_threads = threads;
  opts.only = only;
  const auto results = maxmin::run_acceptance_criteria(opts, std::cout);
  if (results.empty()) {
    std::cerr << "verify: no criteria selected\n";
    return kExitConfig;
  }
  return maxmin::all_passed(results) ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"max-min distributed planning harness"};
  app.require_subcommand(1);

  std::string config_path, algo_override, out_override;
  long long seed_override = -1;
  auto* run = app.add_subcommand("run", "run one experiment from a config file");
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  run->add_option("--algo", algo_override,
                  "override: proposed|rollout_baseline|pomcpow_baseline|optimal");
  run->add_option("--seed", seed_override, "override the config seed");
  run->add_option("--out", out_override, "override the output directory");

  std::vector<std::string> run_dirs;
  std::string compare_out = "compare_out";
  auto* compare = app.add_subcommand("compare", "overlay finished runs");
  compare->add_option("--runs", run_dirs, "run output directories")->required()
      ->expected(-1);
  compare->add_option("--out", compare_out, "output directory");

  bool quick = false;
  std::string verify_out = "acceptance_out";
  int verify_threads = 2;
  int verify_only = 0;
  auto* verify = app.add_subcommand("verify", "execute the oracle/property suite");
  verify->add_flag("--quick", quick, "skip the desk-scale simulation criteria");
  verify->add_option("--out", verify_out, "artifact directory");
  verify->add_option("--threads", verify_threads, "worker threads for the simulations");
  verify->add_option("--only", verify_only, "run a single criterion id");

  auto* schema = app.add_subcommand("schema", "print the config file schema");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return cmd_run(config_path, algo_override, seed_override, out_override);
  if (compare->parsed()) return cmd_compare(run_dirs, compare_out);
  if (verify->parsed()) return cmd_verify(!quick, verify_out, verify_threads, verify_only);
  if (schema->parsed()) {
    std::cout << maxmin::config_schema_help();
    return kExitOk;
  }
  return kExitConfig;
}
