#include <geocorr/errors.hpp>

namespace geocorr {

QuadratureError::QuadratureError(const std::string& what, double estimate, double error_estimate)
    : std::runtime_error(what + " (estimate " + std::to_string(estimate) + ", error " +
                         std::to_string(error_estimate) + ")"),
      estimate_(estimate),
      error_estimate_(error_estimate) {}

}  // namespace geocorr
