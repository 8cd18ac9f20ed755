#include "smc_optl/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace smc_optl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Vector sanitized(Vector log_target) {
  for (auto& v : log_target) {
    if (std::isnan(v)) {
      v = kNegInf;
    }
  }
  return log_target;
}

Positions gather(const Positions& xs, const std::vector<Eigen::Index>& idx) {
  Positions out(static_cast<Eigen::Index>(idx.size()), xs.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = xs.row(idx[i]);
  }
  return out;
}

Vector gather(const Vector& v, const std::vector<Eigen::Index>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = v[idx[i]];
  }
  return out;
}

Vector cumulative(const Vector& weights) {
  Vector cdf(weights.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    cdf[i] = acc;
  }
  cdf /= acc;
  cdf[cdf.size() - 1] = 1.0;
  return cdf;
}

Eigen::Index search(const Vector& cdf, double u) {
  const auto* it = std::upper_bound(cdf.data(), cdf.data() + cdf.size(), u);
  return std::min<Eigen::Index>(it - cdf.data(), cdf.size() - 1);
}

}  // namespace

int RunRecord::resample_count() const {
  return static_cast<int>(
      std::count_if(iterations.begin(), iterations.end(), [](const auto& it) { return it.resampled; }));
}

ParticleSystem init(const GaussianParams& initial_proposal, const LogTarget& target,
                    Eigen::Index num_particles, Rng& rng) {
  if (num_particles < 2) {
    throw InvalidArgumentError("init needs at least 2 particles");
  }
  const Gaussian q(initial_proposal);
  ParticleSystem ps;
  ps.curr = q.sample(rng, num_particles);
  ps.prev = ps.curr;
  ps.log_target = sanitized(target(ps.curr));
  ps.log_w = ps.log_target - q.log_pdf_rows(ps.curr);
  ps.iteration = 1;
  if (!std::isfinite(ps.log_w.maxCoeff())) {
    throw DegenerateWeightsError("target density is zero at every initial sample");
  }
  return ps;
}

ParticleSystem init(const ExperimentConfig& config, Rng& rng) {
  return init(config.proposal.initial, config.target.log_density(), config.num_particles, rng);
}

std::vector<Eigen::Index> multinomial_indices(const Vector& weights, Eigen::Index count, Rng& rng) {
  const Vector cdf = cumulative(weights);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(count));
  for (auto& i : idx) {
    i = search(cdf, uniform(rng));
  }
  return idx;
}

std::vector<Eigen::Index> systematic_indices(const Vector& weights, Eigen::Index count, Rng& rng) {
  const Vector cdf = cumulative(weights);
  const double step = 1.0 / static_cast<double>(count);
  std::uniform_real_distribution<double> uniform(0.0, step);
  const double offset = uniform(rng);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(count));
  for (Eigen::Index j = 0; j < count; ++j) {
    idx[static_cast<std::size_t>(j)] = search(cdf, offset + static_cast<double>(j) * step);
  }
  return idx;
}

ParticleSystem resample(const ParticleSystem& ps, Rng& rng, ResamplingScheme scheme) {
  const Vector w = normalized_weights(ps.log_w);
  const auto idx = scheme == ResamplingScheme::kSystematic ? systematic_indices(w, ps.size(), rng)
                                                           : multinomial_indices(w, ps.size(), rng);
  ParticleSystem out;
  out.curr = gather(ps.curr, idx);
  out.prev = gather(ps.prev, idx);
  out.log_target = gather(ps.log_target, idx);
  out.log_w = Vector::Zero(ps.size());
  out.iteration = ps.iteration;
  return out;
}

Positions propose(const ParticleSystem& ps, const Matrix& random_walk_cov, Rng& rng) {
  const Gaussian step(GaussianParams{Vector::Zero(ps.dim()), random_walk_cov});
  return ps.curr + step.sample(rng, ps.size());
}

ParticleSystem reweight(const ParticleSystem& ps, Positions proposed, const Matrix& random_walk_cov,
                        const FittedLKernel& kernel, const LogTarget& target) {
  if (proposed.rows() != ps.size() || proposed.cols() != ps.dim()) {
    throw DimensionMismatchError("reweight: proposed positions do not match the particle system");
  }
  const Gaussian random_walk(GaussianParams{Vector::Zero(ps.dim()), random_walk_cov});
  const Vector log_target_new = sanitized(target(proposed));

  ParticleSystem out;
  out.log_w.resize(ps.size());
  for (Eigen::Index i = 0; i < ps.size(); ++i) {
    if (ps.log_w[i] == kNegInf || log_target_new[i] == kNegInf) {
      out.log_w[i] = kNegInf;
      continue;
    }
    const auto x_prev = ps.curr.row(i).transpose();
    const auto x_curr = proposed.row(i).transpose();
    const double log_forward = random_walk.log_pdf(x_curr - x_prev);
    const double log_backward = kernel.log_density(random_walk, x_prev, x_curr);
    const double update = log_target_new[i] - ps.log_target[i] + log_backward - log_forward;
    out.log_w[i] = std::isnan(update) ? kNegInf : ps.log_w[i] + update;
  }
  if (!std::isfinite(out.log_w.maxCoeff())) {
    throw DegenerateWeightsError("all particle weights are zero after the update at iteration " +
                                 std::to_string(ps.iteration + 1));
  }
  out.prev = ps.curr;
  out.curr = std::move(proposed);
  out.log_target = log_target_new;
  out.iteration = ps.iteration + 1;
  return out;
}

ParticleSystem propose_and_reweight(const ParticleSystem& ps, const ProposalSpec& proposal,
                                    const LKernelStrategy& strategy, const LogTarget& target, Rng& rng) {
  Positions proposed = propose(ps, proposal.random_walk_cov, rng);
  const FittedLKernel kernel = fit_lkernel(strategy, ps.curr, proposed, rng);
  return reweight(ps, std::move(proposed), proposal.random_walk_cov, kernel, target);
}

Moments estimate_moments(const ParticleSystem& ps) {
  const Vector w = normalized_weights(ps.log_w);
  Vector mean = ps.curr.transpose() * w;
  const Matrix centered = ps.curr.rowwise() - mean.transpose();
  Matrix cov = centered.transpose() * w.asDiagonal() * centered;
  return {std::move(mean), 0.5 * (cov + cov.transpose())};
}

RunRecord run(const ExperimentConfig& config, Rng& rng) {
  config.validate();
  RunRecord record;
  record.num_particles = config.num_particles;
  record.dim = config.dim();
  record.iterations.reserve(static_cast<std::size_t>(config.num_iterations));

  const LogTarget target = config.target.log_density();
  RecyclingState& recycling = record.recycling;
  const auto n = static_cast<double>(config.num_particles);

  auto append = [&](const ParticleSystem& ps, bool resampled) {
    const Moments m = estimate_moments(ps);
    recycling.update(ps.log_w, m.mean, m.cov);
    GaussianParams recycled = recycled_estimate(recycling);
    record.iterations.push_back(IterationRecord{ps.iteration, recycling.l_values().back(), resampled, m.mean,
                                                m.cov, std::move(recycled.mean), std::move(recycled.cov),
                                                recycling.constants()});
  };

  try {
    ParticleSystem ps = init(config, rng);
    append(ps, false);
    for (Eigen::Index k = 2; k <= config.num_iterations; ++k) {
      const bool resampled = ess(ps.log_w) / n < config.ess_threshold_ratio;
      if (resampled) {
        ps = resample(ps, rng, config.resampling);
      }
      ps = propose_and_reweight(ps, config.proposal, config.strategy, target, rng);
      append(ps, resampled);
    }
  } catch (const Error& e) {
    throw RunAbortedError(std::string("run aborted after ") + std::to_string(record.iterations.size()) +
                              " iterations: " + e.what(),
                          std::move(record));
  }
  return record;
}

RunRecord run(const ExperimentConfig& config) {
  Rng rng(config.seed);
  return run(config, rng);
}

}  // namespace smc_optl
