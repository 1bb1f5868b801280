#include "maxmin/max_affine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace maxmin {

namespace {

constexpr double kRidge = 1e-8;

struct Plane {
  Eigen::VectorXd w;
  double b = 0.0;
};

double plane_value(const Plane& p, const Eigen::VectorXd& x) { return p.w.dot(x) + p.b; }

/// Least squares fit of one affine piece on the rows in `cell`.
/// Falls back to ridge-damped normal equations when rank-deficient.
Plane ls_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
             const std::vector<int>& cell, long long* ridge_count) {
  const int d = static_cast<int>(X.cols());
  const int m = static_cast<int>(cell.size());
  Eigen::MatrixXd A(m, d + 1);
  Eigen::VectorXd rhs(m);
  for (int r = 0; r < m; ++r) {
    A.row(r).head(d) = X.row(cell[r]);
    A(r, d) = 1.0;
    rhs[r] = y[cell[r]];
  }
  Eigen::VectorXd theta;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  if (qr.rank() == d + 1) {
    theta = qr.solve(rhs);
  } else {
    if (ridge_count) ++(*ridge_count);
    Eigen::MatrixXd G = A.transpose() * A;
    G.diagonal().array() += kRidge;
    theta = G.ldlt().solve(A.transpose() * rhs);
  }
  Plane p;
  p.w = theta.head(d);
  p.b = theta[d];
  return p;
}

struct Partition {
  std::vector<std::vector<int>> cells;
  std::vector<Plane> planes;
  double sse = std::numeric_limits<double>::infinity();
};

double partition_sse(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const std::vector<Plane>& planes) {
  double sse = 0.0;
  for (int r = 0; r < X.rows(); ++r) {
    double v = -std::numeric_limits<double>::infinity();
    for (const auto& p : planes) v = std::max(v, plane_value(p, X.row(r).transpose()));
    const double e = v - y[r];
    sse += e * e;
  }
  return sse;
}

/// Seeded Lloyd k-means on the inputs; returns per-sample cell assignment.
std::vector<int> kmeans_assign(const Eigen::MatrixXd& X, int k, Rng& rng) {
  const int n = static_cast<int>(X.rows());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Eigen::VectorXd> centers;
  for (int idx : order) {
    Eigen::VectorXd c = X.row(idx).transpose();
    bool dup = false;
    for (const auto& existing : centers)
      if ((existing - c).norm() == 0.0) { dup = true; break; }
    if (!dup) centers.push_back(c);
    if (static_cast<int>(centers.size()) == k) break;
  }
  while (static_cast<int>(centers.size()) < k)  // fewer distinct points than k
    centers.push_back(X.row(order[centers.size() % n]).transpose());

  std::vector<int> assign(n, 0);
  for (int iter = 0; iter < 15; ++iter) {
    bool changed = false;
    for (int r = 0; r < n; ++r) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        double d2 = (X.row(r).transpose() - centers[c]).squaredNorm();
        if (d2 < best_d) { best_d = d2; best = c; }
      }
      if (assign[r] != best) { assign[r] = best; changed = true; }
    }
    std::vector<Eigen::VectorXd> sums(k, Eigen::VectorXd::Zero(X.cols()));
    std::vector<int> counts(k, 0);
    for (int r = 0; r < n; ++r) {
      sums[assign[r]] += X.row(r).transpose();
      ++counts[assign[r]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centers[c] = sums[c] / counts[c];
      } else {
        // reseed an empty cluster to the point farthest from its center
        int far = 0;
        double far_d = -1.0;
        for (int r = 0; r < n; ++r) {
          double d2 = (X.row(r).transpose() - centers[assign[r]]).squaredNorm();
          if (d2 > far_d) { far_d = d2; far = r; }
        }
        centers[c] = X.row(far).transpose();
        changed = true;
      }
    }
    if (!changed) break;
  }
  return assign;
}

std::vector<std::vector<int>> group_cells(const std::vector<int>& assign, int k) {
  std::vector<std::vector<int>> cells(k);
  for (int r = 0; r < static_cast<int>(assign.size()); ++r) cells[assign[r]].push_back(r);
  cells.erase(std::remove_if(cells.begin(), cells.end(),
                             [](const std::vector<int>& c) { return c.empty(); }),
              cells.end());
  return cells;
}

double cell_sse(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                const std::vector<int>& cell, const Plane& p) {
  double sse = 0.0;
  for (int r : cell) {
    const double e = plane_value(p, X.row(r).transpose()) - y[r];
    sse += e * e;
  }
  return sse;
}

/// Splits one cell in two along its largest-variance coordinate (median
/// threshold). Returns false if every point is identical.
bool split_cell(const Eigen::MatrixXd& X, std::vector<int>& cell, std::vector<int>& out) {
  if (cell.size() < 2) return false;
  const int d = static_cast<int>(X.cols());
  int axis = 0;
  double best_var = -1.0;
  for (int c = 0; c < d; ++c) {
    double mean = 0.0;
    for (int r : cell) mean += X(r, c);
    mean /= static_cast<double>(cell.size());
    double var = 0.0;
    for (int r : cell) var += (X(r, c) - mean) * (X(r, c) - mean);
    if (var > best_var) { best_var = var; axis = c; }
  }
  if (best_var <= 0.0) return false;
  std::vector<int> sorted = cell;
  std::sort(sorted.begin(), sorted.end(),
            [&](int a, int b) { return X(a, axis) < X(b, axis) || (X(a, axis) == X(b, axis) && a < b); });
  const std::size_t half = sorted.size() / 2;
  cell.assign(sorted.begin(), sorted.begin() + half);
  out.assign(sorted.begin() + half, sorted.end());
  return !cell.empty() && !out.empty();
}

/// One alternating block: per-cell least squares, argmax reassignment,
/// empty-cell drop and highest-error splits to restore the plane budget.
Partition lspa_block(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int h_max,
                     std::vector<std::vector<int>> cells, int iters, long long* ridge_count) {
  Partition best;
  const int n = static_cast<int>(X.rows());
  for (int iter = 0; iter <= iters; ++iter) {
    std::vector<Plane> planes;
    planes.reserve(cells.size());
    for (const auto& cell : cells) planes.push_back(ls_fit(X, y, cell, ridge_count));
    const double sse = partition_sse(X, y, planes);
    if (sse < best.sse) {
      best.cells = cells;
      best.planes = planes;
      best.sse = sse;
    }
    if (iter == iters) break;

    // reassign each sample to its active hyperplane
    std::vector<std::vector<int>> next(planes.size());
    for (int r = 0; r < n; ++r) {
      int arg = 0;
      double v = plane_value(planes[0], X.row(r).transpose());
      for (int h = 1; h < static_cast<int>(planes.size()); ++h) {
        const double vh = plane_value(planes[h], X.row(r).transpose());
        if (vh > v) { v = vh; arg = h; }
      }
      next[arg].push_back(r);
    }
    // drop empties, then split highest-error cells to restore the budget
    std::vector<std::vector<int>> compact;
    for (auto& cell : next)
      if (!cell.empty()) compact.push_back(std::move(cell));
    while (static_cast<int>(compact.size()) < h_max) {
      int worst = -1;
      double worst_sse = -1.0;
      for (int c = 0; c < static_cast<int>(compact.size()); ++c) {
        if (compact[c].size() < 2) continue;
        Plane p = ls_fit(X, y, compact[c], nullptr);
        const double s = cell_sse(X, y, compact[c], p);
        if (s > worst_sse) { worst_sse = s; worst = c; }
      }
      if (worst < 0) break;
      std::vector<int> spun;
      if (!split_cell(X, compact[worst], spun)) break;
      compact.push_back(std::move(spun));
    }
    cells = std::move(compact);
    if (cells.empty()) break;
  }
  return best;
}

Partition fit_member(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int h_max,
                     const FitConfig& cfg, std::uint64_t seed, long long* ridge_count) {
  Rng rng(seed);
  std::vector<int> assign = kmeans_assign(X, h_max, rng);
  Partition best = lspa_block(X, y, h_max, group_cells(assign, h_max), cfg.lspa_iters, ridge_count);

  for (int round = 0; round < cfg.improvement_rounds; ++round) {
    // perturb: split the highest-error cell of the incumbent; if that would
    // exceed the budget, retire the smallest cell first
    auto cells = best.cells;
    if (cells.empty()) break;
    int worst = 0;
    double worst_sse = -1.0;
    for (int c = 0; c < static_cast<int>(cells.size()); ++c) {
      const double s = cell_sse(X, y, cells[c], best.planes[c]);
      if (s > worst_sse && cells[c].size() >= 2) { worst_sse = s; worst = c; }
    }
    if (worst_sse < 0.0) break;
    std::vector<int> spun;
    if (!split_cell(X, cells[worst], spun)) break;
    cells.push_back(std::move(spun));
    if (static_cast<int>(cells.size()) > h_max) {
      int smallest = 0;
      for (int c = 1; c < static_cast<int>(cells.size()); ++c)
        if (cells[c].size() < cells[smallest].size()) smallest = c;
      auto orphaned = cells[smallest];
      cells.erase(cells.begin() + smallest);
      // orphaned samples rejoin their nearest remaining cell by first sample
      for (int r : orphaned) {
        int tgt = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (int c = 0; c < static_cast<int>(cells.size()); ++c) {
          const double d2 = (X.row(r) - X.row(cells[c][0])).squaredNorm();
          if (d2 < bd) { bd = d2; tgt = c; }
        }
        cells[tgt].push_back(r);
      }
    }
    Partition cand = lspa_block(X, y, h_max, cells, cfg.lspa_iters, ridge_count);
    if (cand.sse < best.sse) best = cand;
  }
  return best;
}

double rmse_on(const MaxAffineModel& model, const Eigen::MatrixXd& X,
               const Eigen::VectorXd& y, const std::vector<int>& rows) {
  if (rows.empty()) return 0.0;
  double sse = 0.0;
  for (int r : rows) {
    const double e = model.eval(X.row(r).transpose()) - y[r];
    sse += e * e;
  }
  return std::sqrt(sse / static_cast<double>(rows.size()));
}

MaxAffineModel to_model(const Partition& part, int input_dim) {
  const int h = static_cast<int>(part.planes.size());
  Eigen::MatrixXd W(h, input_dim);
  Eigen::VectorXd b(h);
  for (int i = 0; i < h; ++i) {
    W.row(i) = part.planes[i].w.transpose();
    b[i] = part.planes[i].b;
  }
  return MaxAffineModel(std::move(W), std::move(b));
}

}  // namespace

MaxAffineModel::MaxAffineModel(Eigen::MatrixXd weights, Eigen::VectorXd offsets)
    : weights_(std::move(weights)), offsets_(std::move(offsets)) {
  if (weights_.rows() != offsets_.size())
    throw std::invalid_argument("MaxAffineModel: weights/offsets mismatch");
  if (weights_.rows() < 1) throw std::invalid_argument("MaxAffineModel: needs >= 1 hyperplane");
}

double MaxAffineModel::eval(const Eigen::VectorXd& x) const {
  return (weights_ * x + offsets_).maxCoeff();
}

int MaxAffineModel::active_index(const Eigen::VectorXd& x) const {
  if (x.size() != weights_.cols())
    throw std::invalid_argument("MaxAffineModel: input dimension mismatch");
  const Eigen::VectorXd vals = weights_ * x + offsets_;
  int best = 0;
  for (int h = 1; h < vals.size(); ++h)
    if (vals[h] > vals[best]) best = h;  // strict: ties keep the lowest index
  return best;
}

Eigen::VectorXd MaxAffineModel::subgradient(const Eigen::VectorXd& x) const {
  return weights_.row(active_index(x)).transpose();
}

MaxAffineModel MaxAffineModel::offset_by(double c) const {
  return MaxAffineModel(weights_, offsets_.array() + c);
}

MaxAffineModel MaxAffineModel::scaled_by(double lambda) const {
  if (lambda <= 0.0) throw std::invalid_argument("MaxAffineModel: scale must be positive");
  return MaxAffineModel(lambda * weights_, lambda * offsets_);
}

void FitConfig::validate() const {
  if (n_hyperplanes < 1) throw std::invalid_argument("FitConfig: n_hyperplanes >= 1");
  if (ensemble_size < 1) throw std::invalid_argument("FitConfig: ensemble_size >= 1");
  if (lspa_iters < 1) throw std::invalid_argument("FitConfig: lspa_iters >= 1");
  if (improvement_rounds < 0) throw std::invalid_argument("FitConfig: improvement_rounds >= 0");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw std::invalid_argument("FitConfig: validation_fraction in (0,1)");
}

MaxAffineModel fit_max_affine(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const FitConfig& cfg, FitReport* report) {
  cfg.validate();
  const int n = static_cast<int>(X.rows());
  const int d = static_cast<int>(X.cols());
  if (n != y.size()) throw std::invalid_argument("fit_max_affine: X/y row mismatch");
  if (n < std::max(cfg.n_hyperplanes, d + 1))
    throw std::invalid_argument("fit_max_affine: need at least max(H, D+1) samples");

  Rng rng(mix64(cfg.rng_seed ^ 0x6d61666669ULL));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  int n_val = static_cast<int>(std::floor(cfg.validation_fraction * n));
  n_val = std::min(n_val, n - std::max(cfg.n_hyperplanes, d + 1));
  bool degenerate = false;
  if (n_val < 1) {  // too few samples to hold any out; validate on train
    n_val = 0;
    degenerate = true;
  }
  std::vector<int> val_rows(order.begin(), order.begin() + n_val);
  std::vector<int> train_rows(order.begin() + n_val, order.end());
  std::sort(val_rows.begin(), val_rows.end());
  std::sort(train_rows.begin(), train_rows.end());

  Eigen::MatrixXd Xtr(train_rows.size(), d);
  Eigen::VectorXd ytr(train_rows.size());
  for (std::size_t r = 0; r < train_rows.size(); ++r) {
    Xtr.row(r) = X.row(train_rows[r]);
    ytr[r] = y[train_rows[r]];
  }
  const std::vector<int>& score_rows = degenerate ? train_rows : val_rows;

  long long ridge_count = 0;
  MaxAffineModel best_model;
  double best_score = std::numeric_limits<double>::infinity();
  int best_member = -1;
  for (int m = 0; m < cfg.ensemble_size; ++m) {
    Partition part = fit_member(Xtr, ytr, cfg.n_hyperplanes, cfg,
                                mix64(cfg.rng_seed + 0x9e37 * (m + 1)), &ridge_count);
    if (part.planes.empty()) continue;
    MaxAffineModel model = to_model(part, d);
    const double score = rmse_on(model, X, y, score_rows);
    if (score < best_score) {
      best_score = score;
      best_model = model;
      best_member = m;
    }
  }
  if (best_member < 0) throw std::runtime_error("fit_max_affine: all ensemble members degenerate");

  if (report) {
    report->chosen_member = best_member;
    report->validation_rmse = best_score;
    report->train_rmse = rmse_on(best_model, X, y, train_rows);
    report->ridge_damped_solves = ridge_count;
    report->degenerate_validation = degenerate;
  }
  return best_model;
}

std::string to_json_string(const MaxAffineModel& model) {
  nlohmann::json j;
  j["format"] = "max_affine_v1";
  j["n_hyperplanes"] = model.n_hyperplanes();
  j["input_dim"] = model.input_dim();
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(model.n_hyperplanes()) * model.input_dim());
  for (int h = 0; h < model.n_hyperplanes(); ++h)
    for (int c = 0; c < model.input_dim(); ++c) w.push_back(model.weights()(h, c));
  j["weights_row_major"] = w;
  std::vector<double> b(model.offsets().data(), model.offsets().data() + model.n_hyperplanes());
  j["offsets"] = b;
  return j.dump(2);
}

MaxAffineModel max_affine_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  if (j.at("format").get<std::string>() != "max_affine_v1")
    throw std::invalid_argument("max_affine_from_json: unknown format");
  const int h = j.at("n_hyperplanes").get<int>();
  const int d = j.at("input_dim").get<int>();
  auto w = j.at("weights_row_major").get<std::vector<double>>();
  auto b = j.at("offsets").get<std::vector<double>>();
  if (static_cast<int>(w.size()) != h * d || static_cast<int>(b.size()) != h)
    throw std::invalid_argument("max_affine_from_json: shape mismatch");
  Eigen::MatrixXd W(h, d);
  for (int i = 0; i < h; ++i)
    for (int c = 0; c < d; ++c) W(i, c) = w[static_cast<std::size_t>(i) * d + c];
  Eigen::VectorXd offs = Eigen::Map<Eigen::VectorXd>(b.data(), h);
  return MaxAffineModel(std::move(W), std::move(offs));
}

bool check_midpoint_convexity(const MaxAffineModel& model, int n_probes, Rng& rng,
                              double tol, double box_halfwidth) {
  std::uniform_real_distribution<double> u(-box_halfwidth, box_halfwidth);
  for (int k = 0; k < n_probes; ++k) {
    Eigen::VectorXd x(model.input_dim()), y(model.input_dim());
    for (int c = 0; c < model.input_dim(); ++c) {
      x[c] = u(rng);
      y[c] = u(rng);
    }
    const double lhs = model.eval(0.5 * (x + y));
    const double rhs = 0.5 * (model.eval(x) + model.eval(y));
    if (lhs > rhs + tol) return false;
  }
  return true;
}

bool check_subgradient_inequality(const MaxAffineModel& model, int n_probes, Rng& rng,
                                  double tol, double box_halfwidth) {
  std::uniform_real_distribution<double> u(-box_halfwidth, box_halfwidth);
  for (int k = 0; k < n_probes; ++k) {
    Eigen::VectorXd x(model.input_dim()), y(model.input_dim());
    for (int c = 0; c < model.input_dim(); ++c) {
      x[c] = u(rng);
      y[c] = u(rng);
    }
    const Eigen::VectorXd g = model.subgradient(x);
    if (model.eval(y) < model.eval(x) + g.dot(y - x) - tol) return false;
  }
  return true;
}

}  // namespace maxmin
