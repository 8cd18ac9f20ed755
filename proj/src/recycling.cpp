#include "smc_optl/recycling.hpp"

#include "smc_optl/weights.hpp"

namespace smc_optl {

void RecyclingState::update(const Vector& log_w, const Vector& mean, const Matrix& cov) {
  if (!means_.empty() && means_.front().size() != mean.size()) {
    throw DimensionMismatchError("recycling: estimate dimension changed between iterations");
  }
  const double l = ess(log_w);
  const Vector wbar = normalized_weights(log_w);
  l_values_.push_back(l);
  sum_squared_weights_.push_back(wbar.squaredNorm());
  means_.push_back(mean);
  second_moments_.push_back(cov + mean * mean.transpose());
}

Vector RecyclingState::constants() const {
  if (l_values_.empty()) {
    throw Error("recycling: no iterations recorded");
  }
  Vector c = Eigen::Map<const Vector>(l_values_.data(), static_cast<Eigen::Index>(l_values_.size()));
  return c / c.sum();
}

RecyclingState update_recycling(RecyclingState state, const Vector& log_w, const Vector& mean,
                                const Matrix& cov) {
  state.update(log_w, mean, cov);
  return state;
}

GaussianParams recycled_estimate(const RecyclingState& state) {
  return recycled_estimate(state, state.constants());
}

GaussianParams recycled_estimate(const RecyclingState& state, const Vector& constants) {
  if (state.empty()) {
    throw Error("recycling: no iterations recorded");
  }
  if (static_cast<std::size_t>(constants.size()) != state.size()) {
    throw DimensionMismatchError("recycling: one constant per iteration required");
  }
  const Eigen::Index d = state.means_.front().size();
  Vector mean = Vector::Zero(d);
  Matrix second = Matrix::Zero(d, d);
  for (std::size_t k = 0; k < state.size(); ++k) {
    const double c = constants[static_cast<Eigen::Index>(k)];
    mean += c * state.means_[k];
    second += c * state.second_moments_[k];
  }
  Matrix cov = second - mean * mean.transpose();
  return {std::move(mean), 0.5 * (cov + cov.transpose())};
}

double recycled_ess(const RecyclingState& state, const Vector& constants) {
  if (static_cast<std::size_t>(constants.size()) != state.size()) {
    throw DimensionMismatchError("recycling: one constant per iteration required");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < state.size(); ++k) {
    const double c = constants[static_cast<Eigen::Index>(k)];
    total += c * c * state.sum_squared_weights()[k];
  }
  return 1.0 / total;
}

}  // namespace smc_optl
