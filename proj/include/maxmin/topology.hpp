#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace maxmin {

/// Undirected communication graph over agents 0..n_agents-1.
///
/// Edges are stored as normalized (lo, hi) pairs, so symmetry holds by
/// construction. Self-loops are rejected; the neighborhood of an agent
/// always includes the agent itself.
class Topology {
 public:
  Topology() = default;
  Topology(int n_agents, const std::vector<std::pair<int, int>>& edges);

  int n_agents() const { return n_agents_; }
  bool has_edge(int i, int j) const;
  const std::set<std::pair<int, int>>& edges() const { return edges_; }

  /// Neighborhood of agent i: edge-neighbors plus i, ascending order.
  const std::vector<int>& neighborhood(int i) const;

  /// Edge-neighbors only (excludes i), ascending order.
  const std::vector<int>& adjacent(int i) const;

  int degree(int i) const;
  bool connected() const;

  bool operator==(const Topology& other) const {
    return n_agents_ == other.n_agents_ && edges_ == other.edges_;
  }

 private:
  void check_index(int i) const;

  int n_agents_ = 0;
  std::set<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> adjacent_;      // per agent, sorted
  std::vector<std::vector<int>> neighborhood_;  // adjacent + self, sorted
};

/// Free-function form used throughout; ascending agent order.
inline const std::vector<int>& neighborhood(const Topology& topo, int i) {
  return topo.neighborhood(i);
}

struct TopologyReport {
  bool symmetric = true;  // by construction, reported for completeness
  bool connected = false;
  int n_agents = 0;
  std::vector<int> degrees;
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Pre-flight diagnostic for the optimizer's graph assumptions.
TopologyReport validate(const Topology& topo);

/// Piecewise-constant sequence of topologies over timesteps. Either cycles
/// through the entries forever or clamps to the last one.
class TopologySchedule {
 public:
  struct Entry {
    Topology topology;
    int duration;  // timesteps, >= 1
  };

  TopologySchedule() = default;
  explicit TopologySchedule(Topology fixed);
  TopologySchedule(std::vector<Entry> entries, bool cyclic);

  const Topology& at(long long t) const;
  int n_agents() const;
  bool cyclic() const { return cyclic_; }
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
  bool cyclic_ = false;
  long long total_ = 0;
};

}  // namespace maxmin
