#include "maxmin/planner.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <sstream>

namespace maxmin {

void PlannerConfig::validate() const {
  if (n_queries < 1) throw std::invalid_argument("PlannerConfig: n_queries >= 1");
  if (max_depth < 1) throw std::invalid_argument("PlannerConfig: max_depth >= 1");
  if (ucb_c < 0.0) throw std::invalid_argument("PlannerConfig: ucb_c >= 0");
  if (k_action < 0.0 || k_outcome < 0.0)
    throw std::invalid_argument("PlannerConfig: widening k >= 0");
  if (!(alpha_action > 0.0 && alpha_action <= 1.0) ||
      !(alpha_outcome > 0.0 && alpha_outcome <= 1.0))
    throw std::invalid_argument("PlannerConfig: widening alpha in (0,1]");
}

bool should_widen(int child_count, int node_visits, double k, double alpha) {
  if (child_count == 0) return true;  // forced first child
  return static_cast<double>(child_count) <
         k * std::pow(static_cast<double>(node_visits), alpha);
}

int ucb1_select(const TreeNode& node, double ucb_c) {
  if (node.edges.empty()) throw std::logic_error("ucb1_select: node has no children");
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  const double log_n = std::log(std::max(1, node.visits));
  for (int e = 0; e < static_cast<int>(node.edges.size()); ++e) {
    const auto& edge = node.edges[e];
    double score;
    if (edge.visits == 0) {
      score = std::numeric_limits<double>::infinity();
    } else {
      score = edge.q_mean + ucb_c * std::sqrt(log_n / edge.visits);
    }
    if (score > best_score) {  // strict: ties keep the lowest insertion index
      best_score = score;
      best = e;
    }
  }
  return best;
}

namespace {

std::string state_key(int depth, const Eigen::VectorXd& state) {
  std::string key(sizeof(int) + sizeof(double) * state.size(), '\0');
  std::memcpy(key.data(), &depth, sizeof(int));
  std::memcpy(key.data() + sizeof(int), state.data(), sizeof(double) * state.size());
  return key;
}

int find_equal_action(const TreeNode& node, const Eigen::VectorXd& a) {
  for (int e = 0; e < static_cast<int>(node.edges.size()); ++e) {
    const auto& b = node.edges[e].action;
    if (b.size() == a.size() && std::memcmp(b.data(), a.data(), sizeof(double) * a.size()) == 0)
      return e;
  }
  return -1;
}

}  // namespace

SearchTree::SearchTree(const GenerativeModel& model, const RolloutPolicy& rollout,
                       PlannerConfig cfg, const SelectionRule* selection)
    : model_(model),
      rollout_(rollout),
      selection_(selection ? selection : &default_rule_),
      cfg_(std::move(cfg)),
      rng_(cfg_.rng_seed) {
  cfg_.validate();
}

void SearchTree::set_root(const Eigen::VectorXd& root_state) {
  if (root_state.size() != model_.state_dim())
    throw std::invalid_argument("SearchTree: root dimension does not match the model");
  root_state_ = root_state;
  root_id_ = lookup_or_create(0, root_state);
}

int SearchTree::lookup_or_create(int depth, const Eigen::VectorXd& state) {
  const std::string key = state_key(depth, state);
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  TreeNode node;
  node.depth = depth;
  nodes_.push_back(std::move(node));
  const int id = static_cast<int>(nodes_.size()) - 1;
  index_.emplace(key, id);
  return id;
}

void SearchTree::run_queries(int count) {
  if (root_id_ < 0) throw std::logic_error("SearchTree: set_root first");
  for (int q = 0; q < count; ++q) {
    QueryTrace trace;
    QueryTrace* tp = cfg_.record_trajectories ? &trace : nullptr;
    simulate(root_id_, root_state_, cfg_.max_depth, tp);
    ++query_counter_;
    if (tp) traces_.push_back(std::move(trace));
  }
}

double SearchTree::simulate(int node_id, const Eigen::VectorXd& state, int remaining,
                            QueryTrace* trace) {
  if (remaining == 0) {
    // depth boundary: estimate the return over the rest of the model horizon
    const int tail = std::max(0, model_.horizon() - nodes_[node_id].depth);
    if (tail == 0) return 0.0;
    double value;
    auto it = model_.deterministic() ? tail_cache_.find(node_id) : tail_cache_.end();
    if (it != tail_cache_.end()) {  // same state, same tail
      value = it->second;
    } else {
      value = rollout_.estimate_return(state, tail, model_, rng_);
      if (model_.deterministic()) tail_cache_.emplace(node_id, value);
    }
    if (trace) {
      trace->leaf_estimate = value;
      trace->leaf_is_rollout = true;
    }
    return value;
  }
  const double gamma = model_.discount();

  nodes_[node_id].visits += 1;

  // progressive widening over actions
  int edge_idx;
  {
    TreeNode& nd = nodes_[node_id];
    if (should_widen(static_cast<int>(nd.edges.size()), nd.visits, cfg_.k_action,
                     cfg_.alpha_action)) {
      Eigen::VectorXd a = model_.sample_action(rng_);
      // finite supports can propose an action that already has a child; the
      // widening slot is then void and selection stays with UCB1
      if (find_equal_action(nd, a) < 0) {
        ActionEdge edge;
        edge.action = std::move(a);
        nd.edges.push_back(std::move(edge));
        edge_idx = static_cast<int>(nd.edges.size()) - 1;
      } else {
        edge_idx = selection_->select(nd, cfg_.ucb_c);
      }
    } else {
      edge_idx = selection_->select(nd, cfg_.ucb_c);
    }
    const double bound = std::max(
        1.0, std::ceil(cfg_.k_action * std::pow(static_cast<double>(nd.visits),
                                                cfg_.alpha_action)));
    if (static_cast<double>(nd.edges.size()) > bound)
      throw std::logic_error("SearchTree: action widening bound violated during search");
  }
  nodes_[node_id].edges[edge_idx].visits += 1;

  // outcome selection with widening (deterministic models keep one child)
  const int edge_visits = nodes_[node_id].edges[edge_idx].visits;
  int outcome_bound;
  if (model_.deterministic()) {
    outcome_bound = 1;
  } else {
    outcome_bound = std::max(
        1, static_cast<int>(std::ceil(cfg_.k_outcome *
                                      std::pow(static_cast<double>(edge_visits),
                                               cfg_.alpha_outcome))));
  }

  int outcome_idx = -1;
  bool fresh_outcome = false;
  {
    ActionEdge& edge = nodes_[node_id].edges[edge_idx];
    if (static_cast<int>(edge.outcomes.size()) < outcome_bound) {
      Eigen::VectorXd next;
      double reward;
      try {
        auto res = model_.step(state, edge.action, rng_);
        next = std::move(res.first);
        reward = res.second;
      } catch (const std::exception& err) {
        throw PlannerError("model step failed at query " + std::to_string(query_counter_) +
                           ", depth " + std::to_string(nodes_[node_id].depth) + ": " +
                           err.what());
      }
      for (int o = 0; o < static_cast<int>(edge.outcomes.size()); ++o) {
        const auto& s = edge.outcomes[o].state;
        if (s.size() == next.size() &&
            std::memcmp(s.data(), next.data(), sizeof(double) * next.size()) == 0) {
          outcome_idx = o;
          break;
        }
      }
      if (outcome_idx < 0) {
        Outcome out;
        out.state = std::move(next);
        out.reward = reward;
        out.count = 0;
        edge.outcomes.push_back(std::move(out));
        outcome_idx = static_cast<int>(edge.outcomes.size()) - 1;
        fresh_outcome = true;
      }
    } else {
      // revisit an existing outcome, categorically by visit count
      long long total = 0;
      for (const auto& o : edge.outcomes) total += std::max(1, o.count);
      std::uniform_int_distribution<long long> pick(1, total);
      long long ticket = edge.outcomes.size() == 1 ? 1 : pick(rng_);
      long long acc = 0;
      for (int o = 0; o < static_cast<int>(edge.outcomes.size()); ++o) {
        acc += std::max(1, edge.outcomes[o].count);
        if (ticket <= acc) {
          outcome_idx = o;
          break;
        }
      }
    }
    edge.outcomes[outcome_idx].count += 1;
  }

  const int node_depth = nodes_[node_id].depth;
  double reward, value_to_go;
  {
    // resolve child node id before recursing so the trace sees it
    ActionEdge& edge = nodes_[node_id].edges[edge_idx];
    Outcome& out = edge.outcomes[outcome_idx];
    reward = out.reward;
    if (out.node < 0) out.node = lookup_or_create(node_depth + 1, out.state);
  }
  if (trace)
    trace->steps.push_back(TrajectoryStep{node_id, edge_idx, reward});

  const int child_node = nodes_[node_id].edges[edge_idx].outcomes[outcome_idx].node;
  const Eigen::VectorXd child_state = nodes_[node_id].edges[edge_idx].outcomes[outcome_idx].state;
  if (fresh_outcome) {
    // leaf evaluation covers the remaining model horizon, so every return is
    // a full-horizon estimate regardless of where the tree path ended
    const int steps = std::max(0, model_.horizon() - node_depth - 1);
    value_to_go = steps > 0 ? rollout_.estimate_return(child_state, steps, model_, rng_) : 0.0;
    if (trace) {
      trace->leaf_estimate = value_to_go;
      trace->leaf_is_rollout = true;
    }
  } else {
    value_to_go = simulate(child_node, child_state, remaining - 1, trace);
  }

  const double total_return = reward + gamma * value_to_go;
  ActionEdge& edge = nodes_[node_id].edges[edge_idx];
  edge.q_mean += (total_return - edge.q_mean) / edge.visits;
  return total_return;
}

std::vector<QSample> SearchTree::root_samples() const {
  if (root_id_ < 0) throw std::logic_error("SearchTree: set_root first");
  std::vector<QSample> samples;
  const TreeNode& root = nodes_[root_id_];
  samples.reserve(root.edges.size());
  for (const auto& edge : root.edges) samples.push_back(QSample{edge.action, edge.q_mean});
  return samples;
}

void SearchTree::check_widening_bound() const {
  for (const auto& nd : nodes_) {
    if (nd.visits == 0) continue;
    const double bound = std::max(
        1.0, std::ceil(cfg_.k_action * std::pow(static_cast<double>(nd.visits),
                                                cfg_.alpha_action)));
    if (static_cast<double>(nd.edges.size()) > bound)
      throw std::logic_error("SearchTree: action widening bound violated");
  }
}

std::vector<QSample> plan(const Eigen::VectorXd& root, const GenerativeModel& model,
                          const RolloutPolicy& rollout, const PlannerConfig& cfg) {
  SearchTree tree(model, rollout, cfg);
  tree.set_root(root);
  tree.run_queries(cfg.n_queries);
  return tree.root_samples();
}

std::string format_trajectory_log(const SearchTree& tree) {
  std::ostringstream out;
  char buf[96];
  int q = 0;
  for (const auto& trace : tree.traces()) {
    out << "q=" << q++ << " steps=";
    for (std::size_t s = 0; s < trace.steps.size(); ++s) {
      const auto& st = trace.steps[s];
      std::snprintf(buf, sizeof(buf), "%s(%d,%d,%.17g)", s ? "|" : "", st.node, st.edge,
                    st.reward);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf), " leaf=%.17g rollout=%d\n", trace.leaf_estimate,
                  trace.leaf_is_rollout ? 1 : 0);
    out << buf;
  }
  return out.str();
}

}  // namespace maxmin
