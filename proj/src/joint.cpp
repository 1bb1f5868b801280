#include "maxmin/joint.hpp"

#include <stdexcept>

namespace maxmin {

std::vector<Eigen::VectorXd> project(const std::vector<Eigen::VectorXd>& per_agent,
                                     const std::vector<int>& indices) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(indices.size());
  int prev = -1;
  for (int idx : indices) {
    if (idx < 0 || idx >= static_cast<int>(per_agent.size()))
      throw std::invalid_argument("project: agent index out of range");
    if (idx <= prev) throw std::invalid_argument("project: indices must be strictly ascending");
    prev = idx;
    out.push_back(per_agent[idx]);
  }
  return out;
}

void scatter_back(std::vector<Eigen::VectorXd>& joint, const std::vector<int>& indices,
                  const std::vector<Eigen::VectorXd>& slice) {
  if (indices.size() != slice.size())
    throw std::invalid_argument("scatter_back: index/slice size mismatch");
  for (std::size_t k = 0; k < indices.size(); ++k) {
    int idx = indices[k];
    if (idx < 0 || idx >= static_cast<int>(joint.size()))
      throw std::invalid_argument("scatter_back: agent index out of range");
    joint[idx] = slice[k];
  }
}

Eigen::VectorXd flatten(const std::vector<Eigen::VectorXd>& per_agent) {
  Eigen::Index total = 0;
  for (const auto& v : per_agent) total += v.size();
  Eigen::VectorXd flat(total);
  Eigen::Index offset = 0;
  for (const auto& v : per_agent) {
    flat.segment(offset, v.size()) = v;
    offset += v.size();
  }
  return flat;
}

std::vector<Eigen::VectorXd> unflatten(const Eigen::VectorXd& flat,
                                       const std::vector<int>& dims) {
  Eigen::Index total = 0;
  for (int d : dims) total += d;
  if (total != flat.size()) throw std::invalid_argument("unflatten: dimension mismatch");
  std::vector<Eigen::VectorXd> out;
  out.reserve(dims.size());
  Eigen::Index offset = 0;
  for (int d : dims) {
    out.push_back(flat.segment(offset, d));
    offset += d;
  }
  return out;
}

}  // namespace maxmin
