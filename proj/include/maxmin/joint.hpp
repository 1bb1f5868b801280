#pragma once

#include <Eigen/Dense>
#include <vector>

namespace maxmin {

/// Factored joint state: one real vector per agent, agent order fixed.
struct JointState {
  std::vector<Eigen::VectorXd> per_agent;

  int n_agents() const { return static_cast<int>(per_agent.size()); }
};

/// Factored joint action, same layout as JointState.
struct JointAction {
  std::vector<Eigen::VectorXd> per_agent;

  int n_agents() const { return static_cast<int>(per_agent.size()); }
};

/// Extracts the sub-vectors for `indices` (must be ascending) preserving
/// order, so slices line up with the flattened layouts used downstream.
std::vector<Eigen::VectorXd> project(const std::vector<Eigen::VectorXd>& per_agent,
                                     const std::vector<int>& indices);

inline JointState project(const JointState& s, const std::vector<int>& indices) {
  return JointState{project(s.per_agent, indices)};
}
inline JointAction project(const JointAction& a, const std::vector<int>& indices) {
  return JointAction{project(a.per_agent, indices)};
}

/// Writes `slice` back into `joint` at `indices`, leaving the complement
/// untouched. Inverse of project on the selected coordinates.
void scatter_back(std::vector<Eigen::VectorXd>& joint, const std::vector<int>& indices,
                  const std::vector<Eigen::VectorXd>& slice);

/// Concatenates per-agent vectors into one flat vector (ascending order).
Eigen::VectorXd flatten(const std::vector<Eigen::VectorXd>& per_agent);

/// Splits a flat vector into per-agent chunks of the given dimensions.
std::vector<Eigen::VectorXd> unflatten(const Eigen::VectorXd& flat,
                                       const std::vector<int>& dims);

}  // namespace maxmin
