#pragma once

#include <vector>

#include "smc_optl/distributions.hpp"

namespace smc_optl {

/// Append-only record of per-iteration estimates and their effective sample
/// sizes, combined with the ESS-maximizing constants c_k = l_k / sum(l).
///
/// Means and second moments E[x x^T] are recycled separately; the recycled
/// covariance is formed from them afterwards.
class RecyclingState {
 public:
  /// Records iteration k. `log_w` are the unnormalized log weights of the
  /// iteration before any resampling reset.
  void update(const Vector& log_w, const Vector& mean, const Matrix& cov);

  [[nodiscard]] std::size_t size() const { return l_values_.size(); }
  [[nodiscard]] bool empty() const { return l_values_.empty(); }
  [[nodiscard]] const std::vector<double>& l_values() const { return l_values_; }
  /// sum_i wbar_i^2 of each iteration's normalized weights.
  [[nodiscard]] const std::vector<double>& sum_squared_weights() const { return sum_squared_weights_; }

  /// Optimal constants, recomputed from the stored l values.
  [[nodiscard]] Vector constants() const;

 private:
  friend GaussianParams recycled_estimate(const RecyclingState& state, const Vector& constants);

  std::vector<double> l_values_;
  std::vector<double> sum_squared_weights_;
  std::vector<Vector> means_;
  std::vector<Matrix> second_moments_;
};

/// Functional form of RecyclingState::update.
RecyclingState update_recycling(RecyclingState state, const Vector& log_w, const Vector& mean,
                                const Matrix& cov);

/// Recycled mean and covariance using the optimal constants.
GaussianParams recycled_estimate(const RecyclingState& state);
/// Recycled mean and covariance for arbitrary convex constants.
GaussianParams recycled_estimate(const RecyclingState& state, const Vector& constants);

/// ESS of the recycled estimator for constants `c`:
/// [ sum_k sum_i (c_k wbar_ik)^2 ]^{-1} = [ sum_k c_k^2 S_k ]^{-1}, S_k = sum_i wbar_ik^2.
double recycled_ess(const RecyclingState& state, const Vector& constants);

}  // namespace smc_optl
