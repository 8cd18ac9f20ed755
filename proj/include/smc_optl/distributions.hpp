#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "smc_optl/errors.hpp"

namespace smc_optl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// One particle (or sample) per row; rows are contiguous.
using Positions = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Rng = std::mt19937_64;

/// Diagonal regularization used for fitted covariances and as the Cholesky fallback.
inline constexpr double kCovarianceJitter = 1e-6;
inline constexpr double kSymmetryTolerance = 1e-12;

struct GaussianParams {
  Vector mean;
  Matrix cov;

  [[nodiscard]] Eigen::Index dim() const { return mean.size(); }
};

struct GmmParams {
  Vector component_weights;
  std::vector<GaussianParams> components;

  [[nodiscard]] Eigen::Index num_components() const { return component_weights.size(); }
  [[nodiscard]] Eigen::Index dim() const { return components.empty() ? 0 : components.front().dim(); }
};

/// Partition of a Gaussian over the stacked pair (x_prev, x_curr), previous state first.
struct JointBlocks {
  Vector mu_prev;
  Vector mu_curr;
  Matrix S_pp;
  Matrix S_pc;
  Matrix S_cp;
  Matrix S_cc;

  [[nodiscard]] Eigen::Index dim() const { return mu_prev.size(); }

  /// Splits a 2D-dimensional Gaussian into its (prev, curr) blocks.
  static JointBlocks partition(const GaussianParams& joint);
  [[nodiscard]] GaussianParams assemble() const;
  [[nodiscard]] GaussianParams marginal_prev() const { return {mu_prev, S_pp}; }
  [[nodiscard]] GaussianParams marginal_curr() const { return {mu_curr, S_cc}; }
};

void validate(const GaussianParams& p);
void validate(const GmmParams& p);
void validate(const JointBlocks& j);

/// Lower Cholesky factor of `cov`. The plain factorization is tried first;
/// on failure the diagonal is jittered once by kCovarianceJitter.
Matrix cholesky_with_jitter(const Matrix& cov);

/// A Gaussian with its Cholesky factor precomputed.
class Gaussian {
 public:
  explicit Gaussian(GaussianParams params);

  [[nodiscard]] double log_pdf(const Eigen::Ref<const Vector>& x) const;
  /// Log density of every row of `xs`.
  [[nodiscard]] Vector log_pdf_rows(const Positions& xs) const;
  [[nodiscard]] Vector sample(Rng& rng) const;
  [[nodiscard]] Positions sample(Rng& rng, Eigen::Index count) const;

  [[nodiscard]] const GaussianParams& params() const { return params_; }
  [[nodiscard]] const Matrix& cholesky_factor() const { return chol_; }
  [[nodiscard]] Eigen::Index dim() const { return params_.dim(); }

 private:
  GaussianParams params_;
  Matrix chol_;
  double log_norm_ = 0.0;
};

class GaussianMixture {
 public:
  explicit GaussianMixture(GmmParams params);

  [[nodiscard]] double log_pdf(const Eigen::Ref<const Vector>& x) const;
  [[nodiscard]] Vector log_pdf_rows(const Positions& xs) const;
  [[nodiscard]] Vector sample(Rng& rng) const;

  [[nodiscard]] const GmmParams& params() const { return params_; }
  [[nodiscard]] const std::vector<Gaussian>& components() const { return components_; }
  [[nodiscard]] Eigen::Index dim() const { return params_.dim(); }

 private:
  GmmParams params_;
  std::vector<Gaussian> components_;
  Vector log_weights_;
};

double gaussian_log_pdf(const GaussianParams& p, const Eigen::Ref<const Vector>& x);
Vector gaussian_sample(const GaussianParams& p, Rng& rng);
double gmm_log_pdf(const GmmParams& p, const Eigen::Ref<const Vector>& x);

/// Sample mean and maximum-likelihood covariance (denominator N) plus kCovarianceJitter on the diagonal.
GaussianParams fit_gaussian(const Positions& samples);

enum class EmInit {
  /// k-means++ seeding followed by Lloyd iterations, then hard assignment.
  kKMeans,
  /// Every sample assigned to a uniformly random component.
  kRandomAssignment,
};

struct EmOptions {
  EmInit init = EmInit::kKMeans;
  /// Stop once |LL_t - LL_{t-1}| < relative_tolerance * |LL_{t-1}|.
  double relative_tolerance = 1e-3;
  int max_iterations = 100;
  /// Number of empty-component reinitializations tolerated before giving up.
  int max_reinitializations = 5;
};

struct EmResult {
  GmmParams params;
  /// Mean per-sample data log-likelihood after each E-step.
  std::vector<double> log_likelihood;
  int iterations = 0;
  bool converged = false;
  int reinitializations = 0;
};

/// Full-covariance EM from a seeded hard initial assignment (see EmInit).
EmResult fit_gmm_em(const Positions& samples, Eigen::Index num_components, Rng& rng,
                    const EmOptions& options = {});
GmmParams fit_gmm(const Positions& samples, Eigen::Index num_components, Rng& rng);

/// Conditional density of x_prev given x_curr under the joint Gaussian.
GaussianParams gaussian_conditional(const JointBlocks& j, const Eigen::Ref<const Vector>& x_curr);

/// Conditional mixture of x_prev given x_curr under a joint mixture over (x_prev, x_curr).
/// Component weights are the responsibilities Pr(m | x_curr).
GmmParams gmm_conditional(const GmmParams& joint, const Eigen::Ref<const Vector>& x_curr);

/// Precomputed conditional of x_prev given x_curr. The conditional covariance
/// does not depend on x_curr, so it is factorized once.
class GaussianBackwardKernel {
 public:
  explicit GaussianBackwardKernel(const JointBlocks& blocks);

  [[nodiscard]] Vector conditional_mean(const Eigen::Ref<const Vector>& x_curr) const;
  [[nodiscard]] GaussianParams conditional(const Eigen::Ref<const Vector>& x_curr) const;
  [[nodiscard]] double log_density(const Eigen::Ref<const Vector>& x_prev,
                                   const Eigen::Ref<const Vector>& x_curr) const;
  [[nodiscard]] const Gaussian& marginal_curr() const { return marginal_curr_; }
  [[nodiscard]] const Matrix& gain() const { return gain_; }
  [[nodiscard]] const Matrix& conditional_cov() const { return residual_.params().cov; }

 private:
  Vector mu_prev_;
  Vector mu_curr_;
  Matrix gain_;
  Gaussian residual_;
  Gaussian marginal_curr_;
};

/// Numerically stable log(sum(exp(v))). Returns -inf when every entry is -inf.
double log_sum_exp(const Eigen::Ref<const Vector>& v);

}  // namespace smc_optl
