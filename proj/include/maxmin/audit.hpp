#pragma once

#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include "maxmin/topology.hpp"

namespace maxmin {

struct AccessViolation {
  long long round = -1;  // optimizer round or timestep, -1 if n/a
  int reader = -1;
  int owner = -1;
  std::string kind;
};

/// Locality ledger. Every place where one agent consumes another agent's
/// data (state slices, samples, models, iterates) reports the access here;
/// non-neighbor reads are kept as violations. Aggregate counters only for
/// the compliant path, so auditing a long run stays cheap.
class AccessAudit {
 public:
  /// Returns true if the access is neighbor-legal (owner in N_reader).
  bool record(const Topology& topo, int reader, int owner, std::string_view kind,
              long long round = -1) {
    bool allowed = reader == owner || topo.has_edge(reader, owner);
    std::lock_guard<std::mutex> lock(mu_);
    ++total_;
    if (!allowed)
      violations_.push_back({round, reader, owner, std::string(kind)});
    return allowed;
  }

  long long total_accesses() const {
    std::lock_guard<std::mutex> lock(mu_);
    return total_;
  }
  std::vector<AccessViolation> violations() const {
    std::lock_guard<std::mutex> lock(mu_);
    return violations_;
  }
  bool clean() const {
    std::lock_guard<std::mutex> lock(mu_);
    return violations_.empty();
  }
  void reset() {
    std::lock_guard<std::mutex> lock(mu_);
    total_ = 0;
    violations_.clear();
  }

 private:
  mutable std::mutex mu_;
  long long total_ = 0;
  std::vector<AccessViolation> violations_;
};

}  // namespace maxmin
