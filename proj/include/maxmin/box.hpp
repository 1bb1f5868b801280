#pragma once

#include <Eigen/Dense>

#include "maxmin/rng.hpp"

namespace maxmin {

/// Axis-aligned box in R^d; the feasible action sets used throughout.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  Box() = default;
  Box(Eigen::VectorXd lo_, Eigen::VectorXd hi_);

  /// Unit box [0,1]^d.
  static Box unit(int dim);
  /// Cube [lo, hi]^d.
  static Box cube(int dim, double lo, double hi);
  /// Concatenation of two boxes (block-diagonal feasible set).
  static Box concat(const Box& a, const Box& b);

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
  Eigen::VectorXd clip(const Eigen::VectorXd& x) const;
  Eigen::VectorXd center() const { return 0.5 * (lo + hi); }
  Eigen::VectorXd sample(Rng& rng) const;
};

}  // namespace maxmin
