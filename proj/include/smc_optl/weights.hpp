#pragma once

#include "smc_optl/distributions.hpp"

namespace smc_optl {

/// Softmax of the log weights. Throws DegenerateWeightsError when no entry is
/// finite or any entry is NaN.
Vector normalized_weights(const Vector& log_w);

/// Effective sample size (sum w)^2 / sum w^2, evaluated after subtracting the
/// maximum log weight.
double ess(const Vector& log_w);

}  // namespace smc_optl
