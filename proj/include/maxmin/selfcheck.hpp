#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace maxmin {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct SelfCheckOptions {
  bool include_end_to_end = true;  // the desk-scale simulation suite
  std::string out_dir = "acceptance_out";
  int n_threads = 2;
  int only = 0;  // run a single criterion id, 0 = all
};

/// Runs the acceptance criteria, printing one pass/fail line per criterion
/// to `log`. Returns all results; overall success = every result passed.
std::vector<CriterionResult> run_acceptance_criteria(const SelfCheckOptions& opts,
                                                     std::ostream& log);

bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace maxmin
