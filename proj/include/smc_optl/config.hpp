#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "smc_optl/distributions.hpp"
#include "smc_optl/lkernels.hpp"

namespace smc_optl {

/// Batch log target: log pi*(x) for every row of the input.
using LogTarget = std::function<Vector(const Positions&)>;

/// Tagged target density.
struct TargetSpec {
  std::variant<GaussianParams, GmmParams> density;

  [[nodiscard]] Eigen::Index dim() const;
  [[nodiscard]] LogTarget log_density() const;
  /// Analytic mean and covariance of the target.
  [[nodiscard]] GaussianParams moments() const;
};

struct ProposalSpec {
  /// Initial proposal q(x_1).
  GaussianParams initial;
  /// Covariance of the Gaussian random walk x_k ~ N(x_{k-1}, random_walk_cov).
  Matrix random_walk_cov;
};

enum class ResamplingScheme { kMultinomial, kSystematic };

std::string to_string(ResamplingScheme scheme);
ResamplingScheme parse_resampling_scheme(const std::string& text);

struct ExperimentConfig {
  std::string name = "custom";
  TargetSpec target;
  ProposalSpec proposal;
  Eigen::Index num_particles = 500;
  Eigen::Index num_iterations = 100;
  double ess_threshold_ratio = 0.5;
  LKernelStrategy strategy;
  std::uint64_t seed = 0;
  int replicates = 20;
  ResamplingScheme resampling = ResamplingScheme::kMultinomial;
  /// Free-form interpretation notes carried into the config echo.
  std::vector<std::string> notes;

  [[nodiscard]] Eigen::Index dim() const { return target.dim(); }
  /// Throws ConfigError on any violated invariant.
  void validate() const;
};

}  // namespace smc_optl
