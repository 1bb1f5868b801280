#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "maxmin/rng.hpp"

namespace maxmin {

/// Convex piecewise-linear model f(x) = max_h (w_h . x + b_h).
class MaxAffineModel {
 public:
  MaxAffineModel() = default;
  MaxAffineModel(Eigen::MatrixXd weights, Eigen::VectorXd offsets);

  int n_hyperplanes() const { return static_cast<int>(weights_.rows()); }
  int input_dim() const { return static_cast<int>(weights_.cols()); }
  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::VectorXd& offsets() const { return offsets_; }

  double eval(const Eigen::VectorXd& x) const;

  /// Index of the active hyperplane at x; ties go to the lowest index.
  int active_index(const Eigen::VectorXd& x) const;

  /// Exact subgradient: the weight row of the active hyperplane.
  Eigen::VectorXd subgradient(const Eigen::VectorXd& x) const;

  /// Model shifted by a constant: eval' = eval + c.
  MaxAffineModel offset_by(double c) const;

  /// Model scaled by lambda > 0: eval' = lambda * eval.
  MaxAffineModel scaled_by(double lambda) const;

 private:
  Eigen::MatrixXd weights_;  // H x D
  Eigen::VectorXd offsets_;  // H
};

struct FitConfig {
  int n_hyperplanes = 8;
  int ensemble_size = 4;
  int lspa_iters = 20;
  int improvement_rounds = 2;
  double validation_fraction = 0.2;
  std::uint64_t rng_seed = 0;

  void validate() const;  // throws std::invalid_argument
};

struct FitReport {
  int chosen_member = -1;
  double validation_rmse = 0.0;
  double train_rmse = 0.0;
  long long ridge_damped_solves = 0;  // rank-deficient least-squares solves refit with ridge
  bool degenerate_validation = false;  // too few samples to hold any out
};

/// Fits a max-affine model to (X, y) by seeded k-means partitioning plus
/// alternating per-cell least squares / argmax reassignment, an ensemble of
/// restarts, and held-out selection. Rows of X are sample inputs.
MaxAffineModel fit_max_affine(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                              const FitConfig& cfg, FitReport* report = nullptr);

/// Serialization (versioned flat record: dims, row-major weights, offsets).
std::string to_json_string(const MaxAffineModel& model);
MaxAffineModel max_affine_from_json(const std::string& text);

/// Property probes used by tests and the self-check suite.
bool check_midpoint_convexity(const MaxAffineModel& model, int n_probes, Rng& rng,
                              double tol = 1e-9, double box_halfwidth = 3.0);
bool check_subgradient_inequality(const MaxAffineModel& model, int n_probes, Rng& rng,
                                  double tol = 1e-9, double box_halfwidth = 3.0);

}  // namespace maxmin
