#pragma once

#include <vector>

#include "smc_optl/config.hpp"
#include "smc_optl/distributions.hpp"
#include "smc_optl/lkernels.hpp"
#include "smc_optl/recycling.hpp"
#include "smc_optl/weights.hpp"

namespace smc_optl {

/// The evolving particle population.
struct ParticleSystem {
  /// Current positions x_k, one particle per row.
  Positions curr;
  /// Positions x_{k-1} that entered the last weight update.
  Positions prev;
  /// Unnormalized log importance weights log w*.
  Vector log_w;
  /// Cached log pi*(curr).
  Vector log_target;
  int iteration = 0;

  [[nodiscard]] Eigen::Index size() const { return curr.rows(); }
  [[nodiscard]] Eigen::Index dim() const { return curr.cols(); }
};

struct Moments {
  Vector mean;
  Matrix cov;
};

struct IterationRecord {
  int iteration = 0;
  double ess = 0.0;
  /// Resampling happened at the start of this iteration, before proposing.
  bool resampled = false;
  Vector mean;
  Matrix cov;
  Vector recycled_mean;
  Matrix recycled_cov;
  Vector recycling_constants;
};

struct RunRecord {
  Eigen::Index num_particles = 0;
  Eigen::Index dim = 0;
  std::vector<IterationRecord> iterations;
  /// Recycling bookkeeping after the last recorded iteration.
  RecyclingState recycling;

  [[nodiscard]] int resample_count() const;
  [[nodiscard]] const IterationRecord& final() const { return iterations.back(); }
};

/// A run that failed part way; carries every iteration completed before the failure.
class RunAbortedError : public Error {
 public:
  RunAbortedError(const std::string& what, RunRecord partial)
      : Error(what), partial_(std::move(partial)) {}
  [[nodiscard]] const RunRecord& partial() const { return partial_; }

 private:
  RunRecord partial_;
};

/// Draws N particles from q(x_1) and weights them by pi*(x) / q(x).
ParticleSystem init(const GaussianParams& initial_proposal, const LogTarget& target,
                    Eigen::Index num_particles, Rng& rng);
ParticleSystem init(const ExperimentConfig& config, Rng& rng);

/// Ancestor indices drawn with probabilities `weights` (which must sum to one).
std::vector<Eigen::Index> multinomial_indices(const Vector& weights, Eigen::Index count, Rng& rng);
std::vector<Eigen::Index> systematic_indices(const Vector& weights, Eigen::Index count, Rng& rng);

/// Resamples with replacement in proportion to the weights; log weights reset to 0.
ParticleSystem resample(const ParticleSystem& ps, Rng& rng,
                        ResamplingScheme scheme = ResamplingScheme::kMultinomial);

/// Random-walk proposal: one draw from N(curr_i, random_walk_cov) per particle.
Positions propose(const ParticleSystem& ps, const Matrix& random_walk_cov, Rng& rng);

/// Weight update for the move curr -> proposed using an already fitted L-kernel:
///   log w += log pi*(x') - log pi*(x) + log L(x | x') - log q(x' | x).
/// Particles already at -inf stay there.
ParticleSystem reweight(const ParticleSystem& ps, Positions proposed, const Matrix& random_walk_cov,
                        const FittedLKernel& kernel, const LogTarget& target);

/// Propose, fit the L-kernel on the (curr, proposed) pairs, and reweight.
ParticleSystem propose_and_reweight(const ParticleSystem& ps, const ProposalSpec& proposal,
                                    const LKernelStrategy& strategy, const LogTarget& target, Rng& rng);

/// Self-normalized estimates of E[x] and Cov[x].
Moments estimate_moments(const ParticleSystem& ps);

/// Full sampler: init, then for k = 2..K resample if ESS/N falls below the
/// threshold, propose and reweight, and record the per-iteration and recycled
/// estimates. Throws RunAbortedError on failure.
RunRecord run(const ExperimentConfig& config, Rng& rng);
/// Seeds a fresh generator from config.seed.
RunRecord run(const ExperimentConfig& config);

}  // namespace smc_optl
