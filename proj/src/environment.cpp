#include "maxmin/environment.hpp"

#include <stdexcept>

namespace maxmin {

std::vector<JointAction> Environment::optimal_plan(const TopologySchedule&, int) const {
  throw std::runtime_error("optimal oracle is not available for this environment");
}

}  // namespace maxmin
