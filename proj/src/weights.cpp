#include "smc_optl/weights.hpp"

#include <cmath>

namespace smc_optl {

namespace {

// exp(log_w - max), with the maximum checked for degeneracy.
Vector shifted_weights(const Vector& log_w) {
  if (log_w.size() == 0) {
    throw DegenerateWeightsError("empty weight vector");
  }
  if (log_w.array().isNaN().any()) {
    throw DegenerateWeightsError("log weights contain NaN");
  }
  const double max = log_w.maxCoeff();
  if (!std::isfinite(max)) {
    throw DegenerateWeightsError(max > 0 ? "log weights contain +inf" : "all log weights are -inf");
  }
  return (log_w.array() - max).exp();
}

}  // namespace

Vector normalized_weights(const Vector& log_w) {
  const Vector w = shifted_weights(log_w);
  return w / w.sum();
}

double ess(const Vector& log_w) {
  const Vector w = shifted_weights(log_w);
  const double total = w.sum();
  return total * total / w.squaredNorm();
}

}  // namespace smc_optl
