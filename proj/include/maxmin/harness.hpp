#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "maxmin/audit.hpp"
#include "maxmin/environment.hpp"
#include "maxmin/formation.hpp"
#include "maxmin/max_affine.hpp"
#include "maxmin/minmax_opt.hpp"
#include "maxmin/planner.hpp"
#include "maxmin/topology.hpp"

namespace maxmin {

enum class Algorithm { Proposed, RolloutBaseline, PomcpowBaseline, Optimal };

std::string algorithm_name(Algorithm algo);
Algorithm algorithm_from_name(const std::string& name);

struct ExperimentConfig {
  std::string name = "run";
  TopologySchedule schedule;
  Algorithm algorithm = Algorithm::Proposed;
  int horizon = 30;
  double discount = 1.0;
  PlannerConfig planner;
  FitConfig fit;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  bool seed_set = false;  // seed is mandatory in configs
  std::string out_dir;
  int n_threads = 1;

  void validate(const Environment& env) const;
};

struct TimestepRecord {
  std::vector<double> instantaneous;  // per agent
  std::vector<double> cumulative;     // per agent, discounted
  double worst_instantaneous = 0.0;
  JointAction action;
  double wall_ms = 0.0;
};

struct RunRecord {
  std::string algorithm;
  std::uint64_t seed = 0;
  int n_agents = 0;
  std::vector<TimestepRecord> steps;

  double worst_cumulative() const;           // min over agents at the last step
  double final_worst_instantaneous() const;  // worst instantaneous at the last step
};

class HarnessError : public std::runtime_error {
 public:
  explicit HarnessError(const std::string& what) : std::runtime_error(what) {}
};

/// Runs one experiment; dispatches on cfg.algorithm. All randomness derives
/// from cfg.seed through a shared scheme, so algorithms are seed-paired.
RunRecord run_experiment(const ExperimentConfig& cfg, const Environment& env,
                         AccessAudit* audit = nullptr);

/// Versioned flat record: `timestep,agent,reward,cumulative,worst_flag`
/// (agent ids are 1-based in files). Bit-stable for a fixed RunRecord.
std::string run_record_csv(const RunRecord& record);

/// Writes run.csv and meta.json into `dir` (created if missing).
void write_run_outputs(const RunRecord& record, const ExperimentConfig& cfg,
                       const std::string& dir);

/// Per-run CSV + worst-agent reward plot per record + one overlay
/// comparison (with the optimal record's steady state as an asymptote line
/// when present), plus summary.csv.
void write_report(const std::vector<RunRecord>& records, const std::string& out_dir);

RunRecord run_record_from_csv(const std::string& csv_text);

}  // namespace maxmin
