#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "maxmin/max_affine.hpp"

using namespace maxmin;

namespace {

MaxAffineModel abs_model() {
  Eigen::MatrixXd w(2, 1);
  w << 1.0, -1.0;
  Eigen::VectorXd b(2);
  b << 0.0, 0.0;
  return MaxAffineModel(w, b);
}

double rmse_on_grid(const MaxAffineModel& m, const Eigen::MatrixXd& X,
                    const Eigen::VectorXd& y) {
  double sse = 0.0;
  for (int i = 0; i < X.rows(); ++i) {
    const double e = m.eval(X.row(i).transpose()) - y[i];
    sse += e * e;
  }
  return std::sqrt(sse / X.rows());
}

/// Brute-force oracle for 1-D convex data: best piecewise-linear fit over
/// contiguous partitions of the sorted grid into at most `k` segments
/// (dynamic program over split points, ordinary least squares per segment),
/// turned into a max-affine model.
MaxAffineModel best_contiguous_fit_1d(const Eigen::VectorXd& xs, const Eigen::VectorXd& ys,
                                      int k) {
  const int n = static_cast<int>(xs.size());
  auto segment_ls = [&](int lo, int hi) {  // inclusive range -> (w, b, sse)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int m = hi - lo + 1;
    for (int i = lo; i <= hi; ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    const double det = m * sxx - sx * sx;
    double w = 0.0, b = sy / m;
    if (std::abs(det) > 1e-14) {
      w = (m * sxy - sx * sy) / det;
      b = (sy - w * sx) / m;
    }
    double sse = 0.0;
    for (int i = lo; i <= hi; ++i) {
      const double e = w * xs[i] + b - ys[i];
      sse += e * e;
    }
    return std::tuple<double, double, double>(w, b, sse);
  };

  // dp[j][i]: best SSE for the first i points using j segments
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> dp(k + 1, std::vector<double>(n + 1, inf));
  std::vector<std::vector<int>> split(k + 1, std::vector<int>(n + 1, -1));
  dp[0][0] = 0.0;
  for (int j = 1; j <= k; ++j) {
    for (int i = 1; i <= n; ++i) {
      for (int prev = j - 1; prev < i; ++prev) {
        if (dp[j - 1][prev] == inf) continue;
        const auto [w, b, sse] = segment_ls(prev, i - 1);
        (void)w;
        (void)b;
        if (dp[j - 1][prev] + sse < dp[j][i]) {
          dp[j][i] = dp[j - 1][prev] + sse;
          split[j][i] = prev;
        }
      }
    }
  }
  int best_j = 1;
  for (int j = 2; j <= k; ++j)
    if (dp[j][n] < dp[best_j][n]) best_j = j;

  std::vector<std::pair<double, double>> lines;
  int i = n;
  for (int j = best_j; j >= 1; --j) {
    const int prev = split[j][i];
    const auto [w, b, sse] = segment_ls(prev, i - 1);
    (void)sse;
    lines.emplace_back(w, b);
    i = prev;
  }
  Eigen::MatrixXd W(lines.size(), 1);
  Eigen::VectorXd B(lines.size());
  for (std::size_t l = 0; l < lines.size(); ++l) {
    W(l, 0) = lines[l].first;
    B[l] = lines[l].second;
  }
  return MaxAffineModel(W, B);
}

}  // namespace

TEST_CASE("eval/subgradient/offset basics") {
  SUBCASE("constant model") {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(1, 3);
    Eigen::VectorXd b(1);
    b << 4.25;
    const MaxAffineModel m(w, b);
    Rng rng(1);
    std::uniform_real_distribution<double> u(-10, 10);
    for (int i = 0; i < 20; ++i) {
      Eigen::VectorXd x(3);
      x << u(rng), u(rng), u(rng);
      CHECK(m.eval(x) == 4.25);
      CHECK(m.subgradient(x) == Eigen::VectorXd::Zero(3));
    }
  }
  SUBCASE("|x| model: values, tie rule, extrapolation") {
    const MaxAffineModel m = abs_model();
    Eigen::VectorXd x(1);
    x << 0.0;
    CHECK(m.eval(x) == 0.0);
    CHECK(m.active_index(x) == 0);          // tie resolves to the lowest index
    CHECK(m.subgradient(x)[0] == 1.0);      // hyperplane 0 carries w=+1
    x << -3.0;
    CHECK(m.eval(x) == 3.0);
    CHECK(m.subgradient(x)[0] == -1.0);
    x << 2.0;
    CHECK(m.subgradient(x)[0] == 1.0);
  }
  SUBCASE("offset shifts values exactly and keeps the argmin") {
    const MaxAffineModel m = abs_model();
    const MaxAffineModel shifted = m.offset_by(-7.5);
    Eigen::VectorXd x(1);
    for (double v : {-2.0, -0.1, 0.0, 0.3, 5.0}) {
      x << v;
      CHECK(shifted.eval(x) == m.eval(x) - 7.5);
      CHECK(shifted.active_index(x) == m.active_index(x));
    }
    CHECK(m.offset_by(0.0).eval(x) == m.eval(x));
    // constant model offset composes additively
    const MaxAffineModel c =
        MaxAffineModel(Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Constant(1, 2.0));
    CHECK(c.offset_by(3.0).eval(x) == 5.0);
  }
  SUBCASE("scaling by a positive factor") {
    const MaxAffineModel m = abs_model().scaled_by(0.5);
    Eigen::VectorXd x(1);
    x << -4.0;
    CHECK(m.eval(x) == 2.0);
    CHECK_THROWS_AS(abs_model().scaled_by(-1.0), std::invalid_argument);
  }
  SUBCASE("dimension mismatch throws") {
    const MaxAffineModel m = abs_model();
    Eigen::VectorXd x(2);
    x << 1.0, 2.0;
    CHECK_THROWS_AS((void)m.subgradient(x), std::invalid_argument);
  }
}

TEST_CASE("fit recovers |x| exactly with two hyperplanes") {
  Eigen::MatrixXd X(5, 1);
  Eigen::VectorXd y(5);
  const double xs[5] = {-1.0, -0.5, 0.0, 0.5, 1.0};
  for (int i = 0; i < 5; ++i) {
    X(i, 0) = xs[i];
    y[i] = std::abs(xs[i]);
  }
  FitConfig cfg;
  cfg.n_hyperplanes = 2;
  cfg.rng_seed = 5;
  FitReport report;
  const MaxAffineModel m = fit_max_affine(X, y, cfg, &report);
  CHECK(rmse_on_grid(m, X, y) < 1e-8);
  CHECK(report.chosen_member >= 0);
}

TEST_CASE("fit recovers a single affine function by least squares") {
  Eigen::MatrixXd X(12, 1);
  Eigen::VectorXd y(12);
  for (int i = 0; i < 12; ++i) {
    X(i, 0) = -2.0 + i * 0.35;
    y[i] = 2.0 * X(i, 0) + 1.0;
  }
  FitConfig cfg;
  cfg.n_hyperplanes = 1;
  cfg.rng_seed = 2;
  const MaxAffineModel m = fit_max_affine(X, y, cfg);
  REQUIRE(m.n_hyperplanes() == 1);
  CHECK(m.weights()(0, 0) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(m.offsets()[0] == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("fit of x^2 meets the piecewise-linear bound; oracle concurs") {
  const int n = 50;
  Eigen::MatrixXd X(n, 1);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = -1.0 + 2.0 * i / (n - 1);
    y[i] = X(i, 0) * X(i, 0);
  }
  const double bound = 1.0 / 128.0;  // sup-norm interpolation error with 8 pieces

  FitConfig cfg;
  cfg.n_hyperplanes = 8;
  cfg.rng_seed = 7;
  const MaxAffineModel fitted = fit_max_affine(X, y, cfg);
  CHECK(rmse_on_grid(fitted, X, y) <= bound);

  // the contiguous-partition oracle confirms the bound is attainable
  const MaxAffineModel oracle = best_contiguous_fit_1d(X.col(0), y, 8);
  CHECK(rmse_on_grid(oracle, X, y) <= bound);
}

TEST_CASE("full-rank cells do not trip the ridge fallback; degenerate cells do") {
  FitConfig cfg;
  cfg.n_hyperplanes = 1;
  cfg.rng_seed = 3;
  SUBCASE("well-posed data") {
    Eigen::MatrixXd X(6, 1);
    Eigen::VectorXd y(6);
    for (int i = 0; i < 6; ++i) {
      X(i, 0) = i;
      y[i] = 3.0 * i - 2.0;
    }
    FitReport report;
    (void)fit_max_affine(X, y, cfg, &report);
    CHECK(report.ridge_damped_solves == 0);
  }
  SUBCASE("identical inputs are rank-deficient and get flagged") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(6, 1);
    Eigen::VectorXd y = Eigen::VectorXd::Constant(6, 1.5);
    FitReport report;
    const MaxAffineModel m = fit_max_affine(X, y, cfg, &report);
    CHECK(report.ridge_damped_solves > 0);
    Eigen::VectorXd x0(1);
    x0 << 0.0;
    CHECK(m.eval(x0) == doctest::Approx(1.5).epsilon(1e-6));
  }
}

TEST_CASE("fit preconditions") {
  Eigen::MatrixXd X(3, 2);
  X << 0, 0, 1, 0, 0, 1;
  Eigen::VectorXd y(3);
  y << 0, 1, 2;
  FitConfig cfg;
  cfg.n_hyperplanes = 4;  // more planes than samples
  CHECK_THROWS_AS(fit_max_affine(X, y, cfg), std::invalid_argument);
  cfg.n_hyperplanes = 1;
  CHECK_NOTHROW(fit_max_affine(X, y, cfg));
  cfg.validation_fraction = 1.5;
  CHECK_THROWS_AS(fit_max_affine(X, y, cfg), std::invalid_argument);
}

TEST_CASE("property probes: convexity and subgradient inequality on fitted models") {
  Rng data_rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Eigen::MatrixXd X(60, 3);
  Eigen::VectorXd y(60);
  for (int i = 0; i < 60; ++i) {
    Eigen::Vector3d x(u(data_rng), u(data_rng), u(data_rng));
    X.row(i) = x.transpose();
    y[i] = x.squaredNorm() + 0.3 * x[0] - x[2];  // convex target
  }
  FitConfig cfg;
  cfg.n_hyperplanes = 6;
  cfg.rng_seed = 21;
  const MaxAffineModel m = fit_max_affine(X, y, cfg);
  Rng probe_rng(99);
  CHECK(check_midpoint_convexity(m, 1000, probe_rng));
  CHECK(check_subgradient_inequality(m, 1000, probe_rng));
}

TEST_CASE("fit is deterministic given the seed; y-scaling scales the model") {
  Eigen::MatrixXd X(30, 2);
  Eigen::VectorXd y(30);
  Rng rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 30; ++i) {
    X(i, 0) = u(rng);
    X(i, 1) = u(rng);
    y[i] = std::abs(X(i, 0)) + 0.5 * std::abs(X(i, 1));
  }
  FitConfig cfg;
  cfg.n_hyperplanes = 4;
  cfg.rng_seed = 77;

  const MaxAffineModel a = fit_max_affine(X, y, cfg);
  const MaxAffineModel b = fit_max_affine(X, y, cfg);
  CHECK(a.weights() == b.weights());
  CHECK(a.offsets() == b.offsets());

  // scaling the targets by lambda > 0 keeps the partition trajectory and
  // scales per-cell least squares linearly
  const double lambda = 3.7;
  const MaxAffineModel scaled = fit_max_affine(X, lambda * y, cfg);
  Rng probe(123);
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd x(2);
    x << u(probe), u(probe);
    CHECK(scaled.eval(x) == doctest::Approx(lambda * a.eval(x)).epsilon(1e-9));
  }
}

TEST_CASE("serialization round-trips") {
  Eigen::MatrixXd w(2, 3);
  w << 1, 2, 3, -0.5, 0.25, 0;
  Eigen::VectorXd b(2);
  b << 0.125, -9.5;
  const MaxAffineModel m(w, b);
  const MaxAffineModel back = max_affine_from_json(to_json_string(m));
  CHECK(back.weights() == m.weights());
  CHECK(back.offsets() == m.offsets());
  CHECK_THROWS(max_affine_from_json("{\"format\":\"nope\"}"));
}

TEST_CASE("golden-file regression: pinned fit reproduces the stored model") {
  Eigen::MatrixXd X(40, 2);
  Eigen::VectorXd y(40);
  Rng rng(20240601);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 40; ++i) {
    X(i, 0) = u(rng);
    X(i, 1) = u(rng);
    y[i] = std::hypot(X(i, 0), 0.5 * X(i, 1)) + 0.25 * X(i, 0);
  }
  FitConfig cfg;
  cfg.n_hyperplanes = 5;
  cfg.rng_seed = 314159;
  const MaxAffineModel model = fit_max_affine(X, y, cfg);

  const char* dir = std::getenv("FIXTURES_DIR");
  std::ifstream in(std::string(dir ? dir : "fixtures") + "/max_affine_golden.json",
                   std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  const MaxAffineModel golden = max_affine_from_json(buf.str());
  REQUIRE(golden.n_hyperplanes() == model.n_hyperplanes());
  CHECK((golden.weights() - model.weights()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((golden.offsets() - model.offsets()).cwiseAbs().maxCoeff() <= 1e-12);
}
