#include "maxmin/box.hpp"

#include <stdexcept>

namespace maxmin {

Box::Box(Eigen::VectorXd lo_, Eigen::VectorXd hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (lo.size() != hi.size()) throw std::invalid_argument("Box: lo/hi size mismatch");
  if ((hi.array() < lo.array()).any()) throw std::invalid_argument("Box: hi < lo");
}

Box Box::unit(int dim) { return cube(dim, 0.0, 1.0); }

Box Box::cube(int dim, double lo, double hi) {
  return Box(Eigen::VectorXd::Constant(dim, lo), Eigen::VectorXd::Constant(dim, hi));
}

Box Box::concat(const Box& a, const Box& b) {
  Eigen::VectorXd lo(a.dim() + b.dim()), hi(a.dim() + b.dim());
  lo << a.lo, b.lo;
  hi << a.hi, b.hi;
  return Box(std::move(lo), std::move(hi));
}

bool Box::contains(const Eigen::VectorXd& x, double tol) const {
  if (x.size() != lo.size()) return false;
  return (x.array() >= lo.array() - tol).all() && (x.array() <= hi.array() + tol).all();
}

Eigen::VectorXd Box::clip(const Eigen::VectorXd& x) const {
  if (x.size() != lo.size()) throw std::invalid_argument("Box::clip: dimension mismatch");
  return x.cwiseMax(lo).cwiseMin(hi);
}

Eigen::VectorXd Box::sample(Rng& rng) const {
  Eigen::VectorXd x(lo.size());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Eigen::Index d = 0; d < lo.size(); ++d) x[d] = lo[d] + (hi[d] - lo[d]) * unit(rng);
  return x;
}

}  // namespace maxmin
