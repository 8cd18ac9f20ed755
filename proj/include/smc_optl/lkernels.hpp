#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "smc_optl/distributions.hpp"

namespace smc_optl {

/// Backward kernel choice for the weight update.
struct LKernelStrategy {
  enum class Kind { kForwardProposal, kGaussianOpt, kGmmOpt };

  Kind kind = Kind::kForwardProposal;
  /// Mixture order; only meaningful for kGmmOpt.
  Eigen::Index components = 1;

  static LKernelStrategy forward_proposal() { return {Kind::kForwardProposal, 1}; }
  static LKernelStrategy gaussian_opt() { return {Kind::kGaussianOpt, 1}; }
  static LKernelStrategy gmm_opt(Eigen::Index m);

  /// Parses "forward", "gauss-opt" or "gmm-opt:M".
  static LKernelStrategy parse(const std::string& text);
  /// Inverse of parse().
  [[nodiscard]] std::string name() const;

  friend bool operator==(const LKernelStrategy&, const LKernelStrategy&) = default;
};

/// Conditional mixture over x_prev given x_curr, with each component precomputed.
class MixtureBackwardKernel {
 public:
  explicit MixtureBackwardKernel(const GmmParams& joint);

  /// Responsibilities Pr(m | x_curr) in log space.
  [[nodiscard]] Vector log_responsibilities(const Eigen::Ref<const Vector>& x_curr) const;
  [[nodiscard]] double log_density(const Eigen::Ref<const Vector>& x_prev,
                                   const Eigen::Ref<const Vector>& x_curr) const;
  [[nodiscard]] const GmmParams& joint() const { return joint_; }

 private:
  GmmParams joint_;
  std::vector<GaussianBackwardKernel> kernels_;
  Vector log_weights_;
};

/// The fitted approximation of the joint proposal over (x_prev, x_curr). Empty
/// for the forward-proposal kernel, which needs no fitting.
class FittedLKernel {
 public:
  using Fit = std::variant<std::monostate, JointBlocks, GmmParams>;

  FittedLKernel() = default;
  explicit FittedLKernel(JointBlocks blocks);
  explicit FittedLKernel(GmmParams joint);

  [[nodiscard]] bool empty() const { return std::holds_alternative<std::monostate>(fit_); }
  [[nodiscard]] const Fit& fit() const { return fit_; }

  /// log L(x_prev | x_curr). `random_walk` is the zero-mean proposal increment
  /// density; the forward-proposal case evaluates it in reverse, N(x_prev; x_curr, cov).
  [[nodiscard]] double log_density(const Gaussian& random_walk, const Eigen::Ref<const Vector>& x_prev,
                                   const Eigen::Ref<const Vector>& x_curr) const;

 private:
  Fit fit_;
  std::optional<GaussianBackwardKernel> gaussian_;
  std::optional<MixtureBackwardKernel> mixture_;
};

/// Fits the L-kernel on the pairs (prev_positions[i], curr_positions[i]), unweighted.
FittedLKernel fit_lkernel(const LKernelStrategy& strategy, const Positions& prev_positions,
                          const Positions& curr_positions, Rng& rng);

/// Convenience wrapper over FittedLKernel::log_density; `random_walk_cov` is the
/// general proposal covariance.
double log_lkernel(const FittedLKernel& fit, const Matrix& random_walk_cov,
                   const Eigen::Ref<const Vector>& x_prev, const Eigen::Ref<const Vector>& x_curr);

/// Stacks prev and curr positions side by side into N x 2D pair samples.
Positions stack_pairs(const Positions& prev_positions, const Positions& curr_positions);

}  // namespace smc_optl
