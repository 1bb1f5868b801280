#include "maxmin/openloop.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace maxmin {

void OpenLoopConfig::validate() const {
  if (iters < 0) throw std::invalid_argument("OpenLoopConfig: iters >= 0");
  if (beta0 <= 0.0) throw std::invalid_argument("OpenLoopConfig: beta0 > 0");
  if (trace_stride < 1) throw std::invalid_argument("OpenLoopConfig: trace_stride >= 1");
}

namespace {

struct Workspace {
  int n = 0, horizon = 0;
  const FormationSpec* spec = nullptr;
  const TopologySchedule* schedule = nullptr;
  std::vector<Eigen::Vector2d> initial;

  // positions[t][i] for t in 1..horizon given flattened actions u
  std::vector<std::vector<Eigen::Vector2d>> positions;

  void forward(const Eigen::VectorXd& u) {
    const Eigen::Matrix2d& B = dynamics_matrix();
    positions.assign(horizon + 1, initial);
    for (int t = 0; t < horizon; ++t) {
      for (int i = 0; i < n; ++i) {
        const Eigen::Vector2d a(u[2 * (t * n + i)], u[2 * (t * n + i) + 1]);
        positions[t + 1][i] = positions[t][i] + B * a;
      }
    }
  }

  /// Per-agent cumulative costs at the current positions.
  std::vector<double> costs() const {
    std::vector<double> c(n, 0.0);
    for (int t = 0; t < horizon; ++t) {
      const Topology& topo = schedule->at(t);
      for (int i = 0; i < n; ++i)
        c[i] -= pair_reward(slice_at(t + 1, topo.neighborhood(i)), topo.neighborhood(i), *spec);
    }
    return c;
  }

  std::vector<Eigen::Vector2d> slice_at(int t, const std::vector<int>& members) const {
    std::vector<Eigen::Vector2d> out;
    out.reserve(members.size());
    for (int m : members) out.push_back(positions[t][m]);
    return out;
  }

  /// Subgradient of the worst agent's cost with respect to the actions.
  Eigen::VectorXd subgradient(int worst_agent) const {
    std::vector<std::vector<Eigen::Vector2d>> grad_pos(
        horizon + 1, std::vector<Eigen::Vector2d>(n, Eigen::Vector2d::Zero()));
    for (int t = 0; t < horizon; ++t) {
      const Topology& topo = schedule->at(t);
      const auto& members = topo.neighborhood(worst_agent);
      for (std::size_t a = 0; a < members.size(); ++a) {
        for (std::size_t b = a + 1; b < members.size(); ++b) {
          const int j = members[a], l = members[b];
          const Eigen::Vector2d delta = (positions[t + 1][j] - positions[t + 1][l]) -
                                        (spec->desired[j] - spec->desired[l]);
          const double norm = delta.norm();
          if (norm < 1e-15) continue;  // zero is a valid subgradient at the kink
          Eigen::Vector2d unit = delta / norm;
          if (spec->ordered_pairs) unit *= 2.0;
          grad_pos[t + 1][j] += unit;
          grad_pos[t + 1][l] -= unit;
        }
      }
    }
    // chain through s_{t+1} = s_0 + B * sum_{tau<=t} a_tau: suffix sums
    const Eigen::Matrix2d Bt = dynamics_matrix().transpose();
    Eigen::VectorXd g = Eigen::VectorXd::Zero(2 * n * horizon);
    std::vector<Eigen::Vector2d> suffix(n, Eigen::Vector2d::Zero());
    for (int t = horizon - 1; t >= 0; --t) {
      for (int i = 0; i < n; ++i) {
        suffix[i] += grad_pos[t + 1][i];
        const Eigen::Vector2d gi = Bt * suffix[i];
        g[2 * (t * n + i)] = gi[0];
        g[2 * (t * n + i) + 1] = gi[1];
      }
    }
    return g;
  }
};

}  // namespace

PlanSimulation simulate_plan(const std::vector<std::vector<Eigen::Vector2d>>& plan,
                             const std::vector<Eigen::Vector2d>& initial,
                             const FormationSpec& spec, const TopologySchedule& schedule) {
  const int n = static_cast<int>(initial.size());
  PlanSimulation sim;
  sim.cumulative.assign(n, 0.0);
  std::vector<Eigen::Vector2d> pos = initial;
  for (const auto& actions : plan) {
    if (static_cast<int>(actions.size()) != n)
      throw std::invalid_argument("simulate_plan: plan width mismatch");
    const int t = static_cast<int>(sim.instantaneous.size());
    const Topology& topo = schedule.at(t);
    for (int i = 0; i < n; ++i) pos[i] = step_dynamics(pos[i], actions[i]);
    std::vector<double> inst(n);
    for (int i = 0; i < n; ++i) {
      std::vector<Eigen::Vector2d> slice;
      for (int m : topo.neighborhood(i)) slice.push_back(pos[m]);
      inst[i] = pair_reward(slice, topo.neighborhood(i), spec);
      sim.cumulative[i] += inst[i];
    }
    sim.instantaneous.push_back(std::move(inst));
  }
  double worst = 0.0;
  for (double c : sim.cumulative) worst = std::max(worst, -c);
  sim.worst_cumulative_cost = worst;
  return sim;
}

OpenLoopResult optimal_openloop(const std::vector<Eigen::Vector2d>& initial,
                                const FormationSpec& spec, const TopologySchedule& schedule,
                                int horizon, const OpenLoopConfig& cfg) {
  cfg.validate();
  if (horizon < 0) throw std::invalid_argument("optimal_openloop: horizon >= 0");
  const int n = static_cast<int>(initial.size());
  if (spec.n_agents() != n || schedule.n_agents() != n)
    throw std::invalid_argument("optimal_openloop: size mismatch");

  OpenLoopResult result;
  if (horizon == 0) {
    result.value = 0.0;
    result.solver_value = 0.0;
    return result;
  }

  Workspace ws;
  ws.n = n;
  ws.horizon = horizon;
  ws.spec = &spec;
  ws.schedule = &schedule;
  ws.initial = initial;

  const int dim = 2 * n * horizon;
  Eigen::VectorXd u = Eigen::VectorXd::Constant(dim, 0.0);  // zero action is feasible
  Eigen::VectorXd best_u = u;
  double best_f = std::numeric_limits<double>::infinity();

  for (long long k = 0; k < cfg.iters; ++k) {
    ws.forward(u);
    const auto costs = ws.costs();
    int worst = 0;
    for (int i = 1; i < n; ++i)
      if (costs[i] > costs[worst]) worst = i;
    const double f = costs[worst];
    if (!std::isfinite(f)) {
      result.diverged = true;
      break;
    }
    if (f < best_f) {
      best_f = f;
      best_u = u;
    }
    if (k % cfg.trace_stride == 0) result.trace.push_back(best_f);

    Eigen::VectorXd g = ws.subgradient(worst);
    if (cfg.normalized_steps) {
      const double norm = g.norm();
      if (norm > 1e-12) g /= norm;
    }
    const double beta = cfg.beta0 / std::sqrt(static_cast<double>(k + 1));
    u = (u - beta * g).cwiseMax(0.0).cwiseMin(1.0);
  }

  result.solver_value = best_f;
  result.plan.assign(horizon, std::vector<Eigen::Vector2d>(n));
  for (int t = 0; t < horizon; ++t)
    for (int i = 0; i < n; ++i)
      result.plan[t][i] = Eigen::Vector2d(best_u[2 * (t * n + i)], best_u[2 * (t * n + i) + 1]);

  // authoritative value: re-simulate the plan through the environment
  result.value = simulate_plan(result.plan, initial, spec, schedule).worst_cumulative_cost;
  return result;
}

}  // namespace maxmin
