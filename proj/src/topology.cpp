#include "maxmin/topology.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

namespace maxmin {

Topology::Topology(int n_agents, const std::vector<std::pair<int, int>>& edges)
    : n_agents_(n_agents) {
  if (n_agents <= 0) throw std::invalid_argument("Topology: n_agents must be positive");
  adjacent_.resize(n_agents);
  for (auto [i, j] : edges) {
    if (i < 0 || i >= n_agents || j < 0 || j >= n_agents)
      throw std::invalid_argument("Topology: edge index out of range");
    if (i == j) throw std::invalid_argument("Topology: self-loops are not allowed");
    auto e = std::minmax(i, j);
    if (edges_.insert({e.first, e.second}).second) {
      adjacent_[i].push_back(j);
      adjacent_[j].push_back(i);
    }
  }
  neighborhood_.resize(n_agents);
  for (int i = 0; i < n_agents; ++i) {
    std::sort(adjacent_[i].begin(), adjacent_[i].end());
    neighborhood_[i] = adjacent_[i];
    neighborhood_[i].push_back(i);
    std::sort(neighborhood_[i].begin(), neighborhood_[i].end());
  }
}

void Topology::check_index(int i) const {
  if (i < 0 || i >= n_agents_) throw std::invalid_argument("Topology: agent index out of range");
}

bool Topology::has_edge(int i, int j) const {
  check_index(i);
  check_index(j);
  if (i == j) return false;
  auto e = std::minmax(i, j);
  return edges_.count({e.first, e.second}) > 0;
}

const std::vector<int>& Topology::neighborhood(int i) const {
  check_index(i);
  return neighborhood_[i];
}

const std::vector<int>& Topology::adjacent(int i) const {
  check_index(i);
  return adjacent_[i];
}

int Topology::degree(int i) const {
  check_index(i);
  return static_cast<int>(adjacent_[i].size());
}

bool Topology::connected() const {
  if (n_agents_ == 0) return false;
  std::vector<char> seen(n_agents_, 0);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = 1;
  int count = 1;
  while (!frontier.empty()) {
    int u = frontier.front();
    frontier.pop();
    for (int v : adjacent_[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        frontier.push(v);
      }
    }
  }
  return count == n_agents_;
}

TopologyReport validate(const Topology& topo) {
  TopologyReport report;
  report.n_agents = topo.n_agents();
  report.degrees.resize(topo.n_agents());
  for (int i = 0; i < topo.n_agents(); ++i) report.degrees[i] = topo.degree(i);
  report.symmetric = true;  // normalized storage cannot hold asymmetric edges
  report.connected = topo.connected();
  if (!report.connected)
    report.violations.push_back("graph is disconnected; consensus will not mix globally");
  return report;
}

TopologySchedule::TopologySchedule(Topology fixed) {
  entries_.push_back(Entry{std::move(fixed), 1});
  cyclic_ = false;
  total_ = 1;
}

TopologySchedule::TopologySchedule(std::vector<Entry> entries, bool cyclic)
    : entries_(std::move(entries)), cyclic_(cyclic) {
  if (entries_.empty()) throw std::invalid_argument("TopologySchedule: no entries");
  total_ = 0;
  const int n = entries_.front().topology.n_agents();
  for (const auto& e : entries_) {
    if (e.duration < 1) throw std::invalid_argument("TopologySchedule: duration must be >= 1");
    if (e.topology.n_agents() != n)
      throw std::invalid_argument("TopologySchedule: all entries must share n_agents");
    total_ += e.duration;
  }
}

const Topology& TopologySchedule::at(long long t) const {
  if (entries_.empty()) throw std::logic_error("TopologySchedule: empty");
  if (t < 0) t = 0;
  if (cyclic_) t %= total_;
  long long acc = 0;
  for (const auto& e : entries_) {
    acc += e.duration;
    if (t < acc) return e.topology;
  }
  return entries_.back().topology;  // clamp past the end
}

int TopologySchedule::n_agents() const {
  if (entries_.empty()) throw std::logic_error("TopologySchedule: empty");
  return entries_.front().topology.n_agents();
}

}  // namespace maxmin
