#include "frcnet/field.hpp"

#include <stdexcept>

namespace frcnet {

State GradientField::value(const State& x) const {
  if (!autonomous())
    throw std::invalid_argument(
        "GradientField: non-autonomous field requires (t_norm, u) inputs");
  return value(x, 0.0, 0.0);
}

Eigen::Matrix2d GradientField::state_jacobian(const State& x) const {
  if (!autonomous())
    throw std::invalid_argument(
        "GradientField: non-autonomous field requires (t_norm, u) inputs");
  return state_jacobian(x, 0.0, 0.0);
}

}  // namespace frcnet
