#include "smc_optl/config.hpp"

#include <memory>

namespace smc_optl {

Eigen::Index TargetSpec::dim() const {
  return std::visit([](const auto& d) { return d.dim(); }, density);
}

LogTarget TargetSpec::log_density() const {
  if (const auto* g = std::get_if<GaussianParams>(&density)) {
    auto dist = std::make_shared<const Gaussian>(*g);
    return [dist](const Positions& xs) { return dist->log_pdf_rows(xs); };
  }
  auto dist = std::make_shared<const GaussianMixture>(std::get<GmmParams>(density));
  return [dist](const Positions& xs) { return dist->log_pdf_rows(xs); };
}

GaussianParams TargetSpec::moments() const {
  if (const auto* g = std::get_if<GaussianParams>(&density)) {
    return *g;
  }
  const auto& gmm = std::get<GmmParams>(density);
  const Eigen::Index d = gmm.dim();
  Vector mean = Vector::Zero(d);
  Matrix second = Matrix::Zero(d, d);
  for (Eigen::Index m = 0; m < gmm.num_components(); ++m) {
    const auto& c = gmm.components[static_cast<std::size_t>(m)];
    const double w = gmm.component_weights[m];
    mean += w * c.mean;
    second += w * (c.cov + c.mean * c.mean.transpose());
  }
  return {mean, second - mean * mean.transpose()};
}

std::string to_string(ResamplingScheme scheme) {
  return scheme == ResamplingScheme::kSystematic ? "systematic" : "multinomial";
}

ResamplingScheme parse_resampling_scheme(const std::string& text) {
  if (text == "multinomial") {
    return ResamplingScheme::kMultinomial;
  }
  if (text == "systematic") {
    return ResamplingScheme::kSystematic;
  }
  throw ConfigError("unknown resampling scheme '" + text + "' (expected multinomial or systematic)");
}

void ExperimentConfig::validate() const {
  if (num_particles < 2) {
    throw ConfigError("N must be at least 2");
  }
  if (num_iterations < 1) {
    throw ConfigError("K must be at least 1");
  }
  if (replicates < 1) {
    throw ConfigError("replicates must be at least 1");
  }
  if (!(ess_threshold_ratio > 0.0 && ess_threshold_ratio <= 1.0)) {
    throw ConfigError("ess_threshold_ratio must lie in (0, 1]");
  }
  try {
    std::visit([](const auto& d) { smc_optl::validate(d); }, target.density);
    smc_optl::validate(proposal.initial);
    smc_optl::validate(GaussianParams{Vector::Zero(proposal.random_walk_cov.rows()), proposal.random_walk_cov});
    // Positive definiteness of user-supplied covariances is checked without jitter.
    auto require_pd = [](const Matrix& cov, const std::string& what) {
      if (Eigen::LLT<Matrix>(cov).info() != Eigen::Success) {
        throw ConfigError(what + " must be positive definite");
      }
    };
    if (const auto* g = std::get_if<GaussianParams>(&target.density)) {
      require_pd(g->cov, "target covariance");
    } else {
      for (const auto& c : std::get<GmmParams>(target.density).components) {
        require_pd(c.cov, "target component covariance");
      }
    }
    require_pd(proposal.initial.cov, "initial proposal covariance");
    require_pd(proposal.random_walk_cov, "random_walk_cov");
  } catch (const InvalidArgumentError& e) {
    throw ConfigError(e.what());
  }
  const Eigen::Index d = dim();
  if (proposal.initial.dim() != d || proposal.random_walk_cov.rows() != d) {
    throw ConfigError("target and proposal dimensions differ");
  }
  if (strategy.kind == LKernelStrategy::Kind::kGmmOpt && strategy.components < 1) {
    throw ConfigError("gmm-opt needs at least one component");
  }
}

}  // namespace smc_optl
