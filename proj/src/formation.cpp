#include "maxmin/formation.hpp"

#include <cmath>
#include <stdexcept>

namespace maxmin {

const Eigen::Matrix2d& dynamics_matrix() {
  static const Eigen::Matrix2d B = [] {
    Eigen::Matrix2d m;
    m << 1.0, 0.0, -1.0, 2.0;
    return m;
  }();
  return B;
}

Eigen::Vector2d step_dynamics(const Eigen::Vector2d& s, const Eigen::Vector2d& a) {
  if (a[0] < -1e-12 || a[0] > 1.0 + 1e-12 || a[1] < -1e-12 || a[1] > 1.0 + 1e-12)
    throw std::invalid_argument("step_dynamics: action outside [0,1]^2");
  return s + dynamics_matrix() * a;
}

double pair_reward(const std::vector<Eigen::Vector2d>& slice, const std::vector<int>& members,
                   const FormationSpec& spec) {
  if (slice.size() != members.size())
    throw std::invalid_argument("pair_reward: slice does not cover the member set");
  double cost = 0.0;
  for (std::size_t a = 0; a < members.size(); ++a) {
    for (std::size_t b = a + 1; b < members.size(); ++b) {
      const Eigen::Vector2d rel = slice[a] - slice[b];
      const Eigen::Vector2d want = spec.desired[members[a]] - spec.desired[members[b]];
      cost += (rel - want).norm();
    }
  }
  if (spec.ordered_pairs) cost *= 2.0;
  return -cost;
}

double local_reward(const std::vector<Eigen::Vector2d>& slice, const FormationSpec& spec,
                    const Topology& topo, int agent) {
  return pair_reward(slice, topo.neighborhood(agent), spec);
}

void RolloutConfig::validate() const {
  if (euler_dt <= 0.0) throw std::invalid_argument("RolloutConfig: euler_dt > 0");
  if (total_time <= 0.0) throw std::invalid_argument("RolloutConfig: total_time > 0");
  if (convergence_tol <= 0.0) throw std::invalid_argument("RolloutConfig: convergence_tol > 0");
  if (lookahead_iters < 1) throw std::invalid_argument("RolloutConfig: lookahead_iters >= 1");
}

ConvergedFlow rollout_converge(const std::vector<Eigen::Vector2d>& initial,
                               const std::vector<Eigen::Vector2d>& desired,
                               const Topology& local_graph, const RolloutConfig& cfg) {
  cfg.validate();
  const int m = static_cast<int>(initial.size());
  if (m != local_graph.n_agents() || m != static_cast<int>(desired.size()))
    throw std::invalid_argument("rollout_converge: size mismatch");
  int max_degree = 0;
  for (int i = 0; i < m; ++i) max_degree = std::max(max_degree, local_graph.degree(i));
  if (cfg.euler_dt >= 2.0 / (2.0 * max_degree + 1.0))
    throw std::invalid_argument("rollout_converge: euler_dt violates the stability bound");

  ConvergedFlow result;
  result.positions = initial;
  Eigen::Vector2d centroid0 = Eigen::Vector2d::Zero();
  for (const auto& p : initial) centroid0 += p;
  centroid0 /= m;

  const int max_steps = static_cast<int>(std::ceil(cfg.total_time / cfg.euler_dt));
  std::vector<Eigen::Vector2d> velocity(m);
  for (int step = 0; step < max_steps; ++step) {
    double max_disp = 0.0;
    double max_residual = 0.0;
    for (int i = 0; i < m; ++i) {
      Eigen::Vector2d v = Eigen::Vector2d::Zero();
      for (int j : local_graph.adjacent(i)) {
        const Eigen::Vector2d e =
            (result.positions[i] - result.positions[j]) - (desired[i] - desired[j]);
        v -= e;
        max_residual = std::max(max_residual, e.norm());
      }
      velocity[i] = v;
    }
    for (int i = 0; i < m; ++i) {
      const Eigen::Vector2d delta = cfg.euler_dt * velocity[i];
      result.positions[i] += delta;
      max_disp = std::max(max_disp, delta.norm());
    }
    result.elapsed_time += cfg.euler_dt;
    // converged once movement has stopped and every edge residual is inside
    // the contract bound (displacement alone can stall one order too early
    // on weakly coupled graphs)
    if (max_disp < cfg.convergence_tol && max_residual < 10.0 * cfg.convergence_tol) {
      result.converged = true;
      break;
    }
  }

  Eigen::Vector2d centroid1 = Eigen::Vector2d::Zero();
  for (const auto& p : result.positions) centroid1 += p;
  centroid1 /= m;
  result.centroid_drift_rate =
      result.elapsed_time > 0.0 ? (centroid1 - centroid0).norm() / result.elapsed_time : 0.0;
  return result;
}

Eigen::Vector2d lookahead_action(const Eigen::Vector2d& s, const Eigen::Vector2d& target,
                                 int max_iters, double tol) {
  const Eigen::Matrix2d& B = dynamics_matrix();
  const Eigen::Matrix2d G = B.transpose() * B;       // Hessian/2 of the objective
  const Eigen::Vector2d delta = target - s;
  // Lipschitz constant of the gradient: 2*lambda_max(B^T B)
  const double lip = 2.0 * 5.2360679774997896;  // eigenvalue of G is (3+sqrt(5))
  const double step = 1.0 / lip;

  // warm start from the clipped unconstrained solution
  Eigen::Vector2d a = (B.inverse() * delta).cwiseMax(0.0).cwiseMin(1.0);
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::Vector2d grad = 2.0 * (G * a - B.transpose() * delta);
    Eigen::Vector2d next = (a - step * grad).cwiseMax(0.0).cwiseMin(1.0);
    const double moved = (next - a).norm();
    a = next;
    if (moved < tol) break;
  }
  return a;
}

Eigen::Vector2d rollout_action(const std::vector<Eigen::Vector2d>& current,
                               const std::vector<Eigen::Vector2d>& converged, int idx,
                               const RolloutConfig& cfg) {
  if (idx < 0 || idx >= static_cast<int>(current.size()))
    throw std::invalid_argument("rollout_action: index out of range");
  return lookahead_action(current[idx], converged[idx], cfg.lookahead_iters, 1e-8);
}

std::vector<Eigen::Vector2d> to_positions(const std::vector<Eigen::VectorXd>& per_agent) {
  std::vector<Eigen::Vector2d> out;
  out.reserve(per_agent.size());
  for (const auto& v : per_agent) {
    if (v.size() != 2) throw std::invalid_argument("to_positions: expected 2-D sub-vectors");
    out.emplace_back(v[0], v[1]);
  }
  return out;
}

std::vector<Eigen::VectorXd> from_positions(const std::vector<Eigen::Vector2d>& pos) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(pos.size());
  for (const auto& p : pos) out.push_back(p);
  return out;
}

namespace {

std::vector<Eigen::Vector2d> split_pairs(const Eigen::VectorXd& flat) {
  if (flat.size() % 2 != 0) throw std::invalid_argument("expected even flat dimension");
  std::vector<Eigen::Vector2d> out(flat.size() / 2);
  for (int k = 0; k < static_cast<int>(out.size()); ++k)
    out[k] = flat.segment<2>(2 * k);
  return out;
}

Eigen::VectorXd join_pairs(const std::vector<Eigen::Vector2d>& pos) {
  Eigen::VectorXd flat(2 * pos.size());
  for (int k = 0; k < static_cast<int>(pos.size()); ++k) flat.segment<2>(2 * k) = pos[k];
  return flat;
}

class LocalFormationModel final : public GenerativeModel {
 public:
  LocalFormationModel(std::vector<int> members, std::vector<Eigen::Vector2d> desired,
                      bool ordered_pairs, double discount, int horizon)
      : members_(std::move(members)),
        desired_(std::move(desired)),
        ordered_(ordered_pairs),
        discount_(discount),
        horizon_(horizon),
        box_(Box::unit(2 * static_cast<int>(members_.size()))) {}

  int state_dim() const override { return 2 * static_cast<int>(members_.size()); }
  int action_dim() const override { return 2 * static_cast<int>(members_.size()); }
  const Box& action_box() const override { return box_; }

  std::pair<Eigen::VectorXd, double> step(const Eigen::VectorXd& state,
                                          const Eigen::VectorXd& action,
                                          Rng&) const override {
    if (state.size() != state_dim() || action.size() != action_dim())
      throw std::invalid_argument("LocalFormationModel: dimension mismatch");
    auto pos = split_pairs(state);
    auto act = split_pairs(action);
    double cost = 0.0;
    for (std::size_t k = 0; k < pos.size(); ++k) pos[k] = step_dynamics(pos[k], act[k]);
    for (std::size_t a = 0; a < pos.size(); ++a) {
      for (std::size_t b = a + 1; b < pos.size(); ++b) {
        const Eigen::Vector2d rel = pos[a] - pos[b];
        const Eigen::Vector2d want = desired_[a] - desired_[b];
        cost += (rel - want).norm();
      }
    }
    if (ordered_) cost *= 2.0;
    return {join_pairs(pos), -cost};
  }

  double discount() const override { return discount_; }
  int horizon() const override { return horizon_; }
  bool deterministic() const override { return true; }

  const std::vector<int>& members() const { return members_; }

 private:
  std::vector<int> members_;
  std::vector<Eigen::Vector2d> desired_;  // aligned with members_
  bool ordered_;
  double discount_;
  int horizon_;
  Box box_;
};

class FormationRollout final : public RolloutPolicy {
 public:
  FormationRollout(std::vector<Eigen::Vector2d> desired, RolloutConfig cfg)
      : desired_(std::move(desired)),
        cfg_(cfg),
        local_graph_(make_complete(static_cast<int>(desired_.size()))) {}

  double estimate_return(const Eigen::VectorXd& state, int steps, const GenerativeModel& model,
                         Rng& rng) const override {
    auto pos = split_pairs(state);
    double total = 0.0;
    double weight = 1.0;
    Eigen::VectorXd flat = state;
    for (int t = 0; t < steps; ++t) {
      const ConvergedFlow flow = rollout_converge(pos, desired_, local_graph_, cfg_);
      Eigen::VectorXd action(2 * pos.size());
      for (int k = 0; k < static_cast<int>(pos.size()); ++k)
        action.segment<2>(2 * k) = lookahead_action(pos[k], flow.positions[k],
                                                    cfg_.lookahead_iters, 1e-8);
      auto [next, reward] = model.step(flat, action, rng);
      flat = std::move(next);
      pos = split_pairs(flat);
      total += weight * reward;
      weight *= model.discount();
    }
    return total;
  }

 private:
  static Topology make_complete(int m) {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) edges.push_back({i, j});
    return Topology(m, edges);
  }

  std::vector<Eigen::Vector2d> desired_;
  RolloutConfig cfg_;
  Topology local_graph_;
};

}  // namespace

std::unique_ptr<GenerativeModel> make_local_formation_model(const Topology& topo,
                                                            const FormationSpec& spec,
                                                            int agent, double discount,
                                                            int horizon) {
  if (spec.n_agents() != topo.n_agents())
    throw std::invalid_argument("make_local_formation_model: spec/topology size mismatch");
  const auto& members = topo.neighborhood(agent);
  std::vector<Eigen::Vector2d> desired;
  desired.reserve(members.size());
  for (int m : members) desired.push_back(spec.desired[m]);
  return std::make_unique<LocalFormationModel>(members, std::move(desired), spec.ordered_pairs,
                                               discount, horizon);
}

std::unique_ptr<RolloutPolicy> make_formation_rollout(const Topology& topo,
                                                      const FormationSpec& spec, int agent,
                                                      const RolloutConfig& cfg) {
  const auto& members = topo.neighborhood(agent);
  std::vector<Eigen::Vector2d> desired;
  desired.reserve(members.size());
  for (int m : members) desired.push_back(spec.desired[m]);
  return std::make_unique<FormationRollout>(std::move(desired), cfg);
}

}  // namespace maxmin
