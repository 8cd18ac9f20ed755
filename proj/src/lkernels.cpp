#include "smc_optl/lkernels.hpp"

#include <charconv>
#include <cmath>
#include <iostream>

namespace smc_optl {

LKernelStrategy LKernelStrategy::gmm_opt(Eigen::Index m) {
  if (m < 1) {
    throw InvalidArgumentError("gmm-opt needs at least one component, got " + std::to_string(m));
  }
  return {Kind::kGmmOpt, m};
}

LKernelStrategy LKernelStrategy::parse(const std::string& text) {
  if (text == "forward") {
    return forward_proposal();
  }
  if (text == "gauss-opt") {
    return gaussian_opt();
  }
  constexpr std::string_view prefix = "gmm-opt:";
  if (text.starts_with(prefix)) {
    const std::string_view digits = std::string_view(text).substr(prefix.size());
    long long m = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), m);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && !digits.empty()) {
      return gmm_opt(static_cast<Eigen::Index>(m));
    }
  }
  throw InvalidArgumentError("unknown L-kernel strategy '" + text +
                             "' (expected forward, gauss-opt or gmm-opt:M)");
}

std::string LKernelStrategy::name() const {
  switch (kind) {
    case Kind::kForwardProposal:
      return "forward";
    case Kind::kGaussianOpt:
      return "gauss-opt";
    case Kind::kGmmOpt:
      return "gmm-opt:" + std::to_string(components);
  }
  return "unknown";
}

MixtureBackwardKernel::MixtureBackwardKernel(const GmmParams& joint) : joint_(joint) {
  validate(joint_);
  kernels_.reserve(joint_.components.size());
  for (const auto& c : joint_.components) {
    kernels_.emplace_back(JointBlocks::partition(c));
  }
  log_weights_ = joint_.component_weights.array().log();
}

Vector MixtureBackwardKernel::log_responsibilities(const Eigen::Ref<const Vector>& x_curr) const {
  Vector log_resp(log_weights_.size());
  for (Eigen::Index m = 0; m < log_resp.size(); ++m) {
    log_resp[m] = log_weights_[m] + kernels_[static_cast<std::size_t>(m)].marginal_curr().log_pdf(x_curr);
  }
  const double norm = log_sum_exp(log_resp);
  if (!std::isfinite(norm)) {
    std::clog << "smc_optl: warning: all mixture responsibilities underflowed; using uniform weights\n";
    return Vector::Constant(log_resp.size(), -std::log(static_cast<double>(log_resp.size())));
  }
  return log_resp.array() - norm;
}

double MixtureBackwardKernel::log_density(const Eigen::Ref<const Vector>& x_prev,
                                          const Eigen::Ref<const Vector>& x_curr) const {
  Vector terms = log_responsibilities(x_curr);
  for (Eigen::Index m = 0; m < terms.size(); ++m) {
    terms[m] += kernels_[static_cast<std::size_t>(m)].log_density(x_prev, x_curr);
  }
  return log_sum_exp(terms);
}

FittedLKernel::FittedLKernel(JointBlocks blocks) : fit_(std::move(blocks)) {
  gaussian_.emplace(std::get<JointBlocks>(fit_));
}

FittedLKernel::FittedLKernel(GmmParams joint) : fit_(std::move(joint)) {
  mixture_.emplace(std::get<GmmParams>(fit_));
}

double FittedLKernel::log_density(const Gaussian& random_walk, const Eigen::Ref<const Vector>& x_prev,
                                  const Eigen::Ref<const Vector>& x_curr) const {
  if (x_prev.size() != x_curr.size()) {
    throw DimensionMismatchError("L-kernel: x_prev and x_curr dimensions differ");
  }
  if (gaussian_) {
    return gaussian_->log_density(x_prev, x_curr);
  }
  if (mixture_) {
    return mixture_->log_density(x_prev, x_curr);
  }
  return random_walk.log_pdf(x_prev - x_curr);
}

Positions stack_pairs(const Positions& prev_positions, const Positions& curr_positions) {
  if (prev_positions.rows() != curr_positions.rows() || prev_positions.cols() != curr_positions.cols()) {
    throw DimensionMismatchError("L-kernel fit: previous and current position matrices differ in shape");
  }
  Positions pairs(prev_positions.rows(), 2 * prev_positions.cols());
  pairs << prev_positions, curr_positions;
  return pairs;
}

FittedLKernel fit_lkernel(const LKernelStrategy& strategy, const Positions& prev_positions,
                          const Positions& curr_positions, Rng& rng) {
  switch (strategy.kind) {
    case LKernelStrategy::Kind::kForwardProposal:
      return {};
    case LKernelStrategy::Kind::kGaussianOpt:
      return FittedLKernel(JointBlocks::partition(fit_gaussian(stack_pairs(prev_positions, curr_positions))));
    case LKernelStrategy::Kind::kGmmOpt:
      return FittedLKernel(fit_gmm(stack_pairs(prev_positions, curr_positions), strategy.components, rng));
  }
  throw InvalidArgumentError("unknown L-kernel strategy");
}

double log_lkernel(const FittedLKernel& fit, const Matrix& random_walk_cov,
                   const Eigen::Ref<const Vector>& x_prev, const Eigen::Ref<const Vector>& x_curr) {
  const Gaussian random_walk(GaussianParams{Vector::Zero(random_walk_cov.rows()), random_walk_cov});
  return fit.log_density(random_walk, x_prev, x_curr);
}

}  // namespace smc_optl
