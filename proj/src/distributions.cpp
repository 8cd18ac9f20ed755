#include "smc_optl/distributions.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <string>

namespace smc_optl {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // ln(2*pi)
constexpr double kEmptyComponentMass = 1e-10;

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

void check_square(const Matrix& m, Eigen::Index dim, const char* what) {
  if (m.rows() != dim || m.cols() != dim) {
    throw DimensionMismatchError(std::string(what) + ": expected " + std::to_string(dim) + "x" +
                                 std::to_string(dim) + " matrix, got " + std::to_string(m.rows()) +
                                 "x" + std::to_string(m.cols()));
  }
}

void check_symmetric(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw InvalidArgumentError(std::string(what) + " has non-finite entries");
  }
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance) {
    throw InvalidArgumentError(std::string(what) + " is not symmetric");
  }
}

// Weighted mean and covariance with denominator sum(weights). Shared by
// fit_gaussian and the EM M-step so the single-component fit matches exactly.
GaussianParams weighted_moments(const Positions& xs, const Vector& weights, double total) {
  Vector mean = (xs.transpose() * weights) / total;
  Matrix centered = xs.rowwise() - mean.transpose();
  Matrix cov = (centered.transpose() * weights.asDiagonal() * centered) / total;
  return {std::move(mean), symmetrized(cov)};
}

void add_jitter(GaussianParams& p) { p.cov.diagonal().array() += kCovarianceJitter; }

constexpr int kLloydIterations = 20;

// Hard assignment from k-means++ seeding refined by Lloyd iterations.
std::vector<Eigen::Index> kmeans_assignment(const Positions& xs, Eigen::Index k, Rng& rng) {
  const Eigen::Index n = xs.rows();
  Positions centers(k, xs.cols());
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  centers.row(0) = xs.row(first(rng));
  Vector nearest = (xs.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (Eigen::Index c = 1; c < k; ++c) {
    Eigen::Index pick = 0;
    if (nearest.sum() > 0.0) {
      std::discrete_distribution<Eigen::Index> by_distance(nearest.begin(), nearest.end());
      pick = by_distance(rng);
    } else {
      pick = first(rng);
    }
    centers.row(c) = xs.row(pick);
    nearest = nearest.cwiseMin((xs.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  std::vector<Eigen::Index> label(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < kLloydIterations; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      (centers.rowwise() - xs.row(i)).rowwise().squaredNorm().minCoeff(&best);
      if (label[static_cast<std::size_t>(i)] != best) {
        label[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed) {
      break;
    }
    Positions sums = Positions::Zero(k, xs.cols());
    Vector counts = Vector::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(label[static_cast<std::size_t>(i)]) += xs.row(i);
      counts[label[static_cast<std::size_t>(i)]] += 1.0;
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[c] > 0.0) {
        centers.row(c) = sums.row(c) / counts[c];
      }
    }
  }
  return label;
}

}  // namespace

double log_sum_exp(const Eigen::Ref<const Vector>& v) {
  if (v.size() == 0) {
    return -std::numeric_limits<double>::infinity();
  }
  const double max = v.maxCoeff();
  if (!std::isfinite(max)) {
    return max;  // -inf when all entries are -inf, +inf/NaN propagate
  }
  return max + std::log((v.array() - max).exp().sum());
}

JointBlocks JointBlocks::partition(const GaussianParams& joint) {
  const Eigen::Index total = joint.dim();
  if (total == 0 || total % 2 != 0) {
    throw DimensionMismatchError("joint Gaussian must have even dimension, got " + std::to_string(total));
  }
  const Eigen::Index d = total / 2;
  return {joint.mean.head(d),
          joint.mean.tail(d),
          joint.cov.topLeftCorner(d, d),
          joint.cov.topRightCorner(d, d),
          joint.cov.bottomLeftCorner(d, d),
          joint.cov.bottomRightCorner(d, d)};
}

GaussianParams JointBlocks::assemble() const {
  const Eigen::Index d = dim();
  GaussianParams joint{Vector(2 * d), Matrix(2 * d, 2 * d)};
  joint.mean << mu_prev, mu_curr;
  joint.cov << S_pp, S_pc, S_cp, S_cc;
  return joint;
}

void validate(const GaussianParams& p) {
  if (p.dim() == 0) {
    throw DimensionMismatchError("Gaussian has zero dimension");
  }
  if (!p.mean.allFinite()) {
    throw InvalidArgumentError("Gaussian mean has non-finite entries");
  }
  check_square(p.cov, p.dim(), "covariance");
  check_symmetric(p.cov, "covariance");
}

void validate(const GmmParams& p) {
  if (p.num_components() == 0 || static_cast<std::size_t>(p.num_components()) != p.components.size()) {
    throw InvalidArgumentError("mixture needs one weight per component and at least one component");
  }
  if ((p.component_weights.array() < 0.0).any() || (p.component_weights.array() > 1.0).any() ||
      std::abs(p.component_weights.sum() - 1.0) > 1e-12) {
    throw InvalidArgumentError("mixture weights must form a probability vector");
  }
  const Eigen::Index d = p.dim();
  for (const auto& c : p.components) {
    validate(c);
    if (c.dim() != d) {
      throw DimensionMismatchError("mixture components have different dimensions");
    }
  }
}

void validate(const JointBlocks& j) {
  const Eigen::Index d = j.dim();
  if (d == 0 || j.mu_curr.size() != d) {
    throw DimensionMismatchError("joint blocks: mean blocks must share a nonzero dimension");
  }
  check_square(j.S_pp, d, "S_pp");
  check_square(j.S_pc, d, "S_pc");
  check_square(j.S_cp, d, "S_cp");
  check_square(j.S_cc, d, "S_cc");
  check_symmetric(j.S_pp, "S_pp");
  check_symmetric(j.S_cc, "S_cc");
  if ((j.S_cp - j.S_pc.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance) {
    throw InvalidArgumentError("S_cp must equal the transpose of S_pc");
  }
}

Matrix cholesky_with_jitter(const Matrix& cov) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() == Eigen::Success && llt.matrixL().toDenseMatrix().allFinite()) {
    return llt.matrixL();
  }
  Matrix jittered = cov;
  jittered.diagonal().array() += kCovarianceJitter;
  llt.compute(jittered);
  if (llt.info() != Eigen::Success || !Matrix(llt.matrixL()).allFinite()) {
    throw SingularCovarianceError("covariance is not positive definite even after jitter " +
                                  std::to_string(kCovarianceJitter));
  }
  return llt.matrixL();
}

Gaussian::Gaussian(GaussianParams params) : params_(std::move(params)) {
  validate(params_);
  chol_ = cholesky_with_jitter(params_.cov);
  log_norm_ = 0.5 * static_cast<double>(dim()) * kLog2Pi + chol_.diagonal().array().log().sum();
}

double Gaussian::log_pdf(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != dim()) {
    throw DimensionMismatchError("log_pdf: point has dimension " + std::to_string(x.size()) +
                                 ", expected " + std::to_string(dim()));
  }
  const Vector z = chol_.triangularView<Eigen::Lower>().solve(x - params_.mean);
  return -0.5 * z.squaredNorm() - log_norm_;
}

Vector Gaussian::log_pdf_rows(const Positions& xs) const {
  if (xs.cols() != dim()) {
    throw DimensionMismatchError("log_pdf: points have dimension " + std::to_string(xs.cols()) +
                                 ", expected " + std::to_string(dim()));
  }
  Matrix diff = (xs.rowwise() - params_.mean.transpose()).transpose();
  chol_.triangularView<Eigen::Lower>().solveInPlace(diff);
  return (-0.5 * diff.colwise().squaredNorm().array() - log_norm_).matrix().transpose();
}

Vector Gaussian::sample(Rng& rng) const {
  std::normal_distribution<double> normal;
  Vector z(dim());
  for (auto& v : z) {
    v = normal(rng);
  }
  return params_.mean + chol_ * z;
}

Positions Gaussian::sample(Rng& rng, Eigen::Index count) const {
  Positions out(count, dim());
  for (Eigen::Index i = 0; i < count; ++i) {
    out.row(i) = sample(rng).transpose();
  }
  return out;
}

GaussianMixture::GaussianMixture(GmmParams params) : params_(std::move(params)) {
  validate(params_);
  components_.reserve(params_.components.size());
  for (const auto& c : params_.components) {
    components_.emplace_back(c);
  }
  log_weights_ = params_.component_weights.array().log();
}

double GaussianMixture::log_pdf(const Eigen::Ref<const Vector>& x) const {
  Vector terms(log_weights_.size());
  for (Eigen::Index m = 0; m < terms.size(); ++m) {
    terms[m] = log_weights_[m] + components_[static_cast<std::size_t>(m)].log_pdf(x);
  }
  return log_sum_exp(terms);
}

Vector GaussianMixture::log_pdf_rows(const Positions& xs) const {
  Matrix terms(xs.rows(), log_weights_.size());
  for (Eigen::Index m = 0; m < terms.cols(); ++m) {
    terms.col(m) = components_[static_cast<std::size_t>(m)].log_pdf_rows(xs).array() + log_weights_[m];
  }
  Vector out(xs.rows());
  for (Eigen::Index i = 0; i < xs.rows(); ++i) {
    out[i] = log_sum_exp(terms.row(i).transpose());
  }
  return out;
}

Vector GaussianMixture::sample(Rng& rng) const {
  std::discrete_distribution<Eigen::Index> pick(params_.component_weights.begin(),
                                                params_.component_weights.end());
  return components_[static_cast<std::size_t>(pick(rng))].sample(rng);
}

double gaussian_log_pdf(const GaussianParams& p, const Eigen::Ref<const Vector>& x) {
  return Gaussian(p).log_pdf(x);
}

Vector gaussian_sample(const GaussianParams& p, Rng& rng) { return Gaussian(p).sample(rng); }

double gmm_log_pdf(const GmmParams& p, const Eigen::Ref<const Vector>& x) {
  return GaussianMixture(p).log_pdf(x);
}

GaussianParams fit_gaussian(const Positions& samples) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index d = samples.cols();
  if (d == 0 || n < d + 1) {
    throw InsufficientSamplesError("fit_gaussian needs at least D+1 = " + std::to_string(d + 1) +
                                   " samples, got " + std::to_string(n));
  }
  GaussianParams fit = weighted_moments(samples, Vector::Ones(n), static_cast<double>(n));
  add_jitter(fit);
  return fit;
}

EmResult fit_gmm_em(const Positions& samples, Eigen::Index num_components, Rng& rng,
                    const EmOptions& options) {
  const Eigen::Index n = samples.rows();
  const Eigen::Index d = samples.cols();
  const Eigen::Index m_count = num_components;
  if (m_count < 1) {
    throw InvalidArgumentError("fit_gmm needs at least one component");
  }
  if (d == 0 || n < m_count * (d + 1)) {
    throw InsufficientSamplesError("fit_gmm needs at least M*(D+1) = " +
                                   std::to_string(m_count * (d + 1)) + " samples, got " +
                                   std::to_string(n));
  }

  Matrix resp = Matrix::Zero(n, m_count);
  if (m_count == 1) {
    resp.setOnes();
  } else if (options.init == EmInit::kKMeans) {
    const auto label = kmeans_assignment(samples, m_count, rng);
    for (Eigen::Index i = 0; i < n; ++i) {
      resp(i, label[static_cast<std::size_t>(i)]) = 1.0;
    }
  } else {
    std::uniform_int_distribution<Eigen::Index> pick(0, m_count - 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      resp(i, pick(rng)) = 1.0;
    }
  }

  EmResult result;
  result.params.components.resize(static_cast<std::size_t>(m_count));
  result.params.component_weights.resize(m_count);
  std::uniform_int_distribution<Eigen::Index> pick_sample(0, n - 1);
  GaussianParams pooled;  // lazily computed fallback covariance for reinitialized components
  Matrix log_terms(n, m_count);
  double previous_ll = 0.0;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    // M-step.
    for (Eigen::Index m = 0; m < m_count; ++m) {
      auto& comp = result.params.components[static_cast<std::size_t>(m)];
      const Vector r = resp.col(m);
      const double mass = r.sum();
      if (mass < kEmptyComponentMass) {
        if (++result.reinitializations > options.max_reinitializations) {
          throw Error("fit_gmm: component " + std::to_string(m) + " collapsed after " +
                      std::to_string(options.max_reinitializations) + " reinitializations");
        }
        if (pooled.dim() == 0) {
          pooled = weighted_moments(samples, Vector::Ones(n), static_cast<double>(n));
          add_jitter(pooled);
        }
        comp.mean = samples.row(pick_sample(rng)).transpose();
        comp.cov = pooled.cov;
        result.params.component_weights[m] = 1.0 / static_cast<double>(m_count);
        continue;
      }
      comp = weighted_moments(samples, r, mass);
      result.params.component_weights[m] = mass / static_cast<double>(n);
    }
    result.params.component_weights /= result.params.component_weights.sum();

    // E-step.
    for (Eigen::Index m = 0; m < m_count; ++m) {
      const Gaussian g(result.params.components[static_cast<std::size_t>(m)]);
      log_terms.col(m) = g.log_pdf_rows(samples).array() + std::log(result.params.component_weights[m]);
    }
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double norm = log_sum_exp(log_terms.row(i).transpose());
      ll += norm;
      resp.row(i) = (log_terms.row(i).array() - norm).exp();
    }
    ll /= static_cast<double>(n);
    result.log_likelihood.push_back(ll);
    result.iterations = iter + 1;

    if (iter > 0 && std::abs(ll - previous_ll) < options.relative_tolerance * std::abs(previous_ll)) {
      result.converged = true;
      break;
    }
    previous_ll = ll;
  }

  for (auto& c : result.params.components) {
    add_jitter(c);
  }
  return result;
}

GmmParams fit_gmm(const Positions& samples, Eigen::Index num_components, Rng& rng) {
  return fit_gmm_em(samples, num_components, rng).params;
}

GaussianBackwardKernel::GaussianBackwardKernel(const JointBlocks& blocks)
    : mu_prev_(blocks.mu_prev),
      mu_curr_(blocks.mu_curr),
      gain_([&] {
        validate(blocks);
        const Matrix chol = cholesky_with_jitter(blocks.S_cc);
        // gain = S_pc * S_cc^{-1}, solved as S_cc^{-1} * S_cp then transposed.
        Matrix solved = chol.triangularView<Eigen::Lower>().solve(blocks.S_cp);
        chol.triangularView<Eigen::Lower>().transpose().solveInPlace(solved);
        return Matrix(solved.transpose());
      }()),
      residual_(GaussianParams{Vector::Zero(blocks.dim()),
                               symmetrized(blocks.S_pp - gain_ * blocks.S_cp)}),
      marginal_curr_(blocks.marginal_curr()) {}

Vector GaussianBackwardKernel::conditional_mean(const Eigen::Ref<const Vector>& x_curr) const {
  if (x_curr.size() != mu_curr_.size()) {
    throw DimensionMismatchError("conditional: x_curr has dimension " + std::to_string(x_curr.size()) +
                                 ", expected " + std::to_string(mu_curr_.size()));
  }
  return mu_prev_ + gain_ * (x_curr - mu_curr_);
}

GaussianParams GaussianBackwardKernel::conditional(const Eigen::Ref<const Vector>& x_curr) const {
  return {conditional_mean(x_curr), residual_.params().cov};
}

double GaussianBackwardKernel::log_density(const Eigen::Ref<const Vector>& x_prev,
                                           const Eigen::Ref<const Vector>& x_curr) const {
  return residual_.log_pdf(x_prev - conditional_mean(x_curr));
}

GaussianParams gaussian_conditional(const JointBlocks& j, const Eigen::Ref<const Vector>& x_curr) {
  return GaussianBackwardKernel(j).conditional(x_curr);
}

GmmParams gmm_conditional(const GmmParams& joint, const Eigen::Ref<const Vector>& x_curr) {
  validate(joint);
  const Eigen::Index m_count = joint.num_components();
  GmmParams out;
  out.components.reserve(static_cast<std::size_t>(m_count));
  Vector log_resp(m_count);
  for (Eigen::Index m = 0; m < m_count; ++m) {
    const JointBlocks blocks = JointBlocks::partition(joint.components[static_cast<std::size_t>(m)]);
    const GaussianBackwardKernel kernel(blocks);
    out.components.push_back(kernel.conditional(x_curr));
    log_resp[m] = std::log(joint.component_weights[m]) + kernel.marginal_curr().log_pdf(x_curr);
  }
  const double norm = log_sum_exp(log_resp);
  if (!std::isfinite(norm)) {
    std::clog << "smc_optl: warning: all mixture responsibilities underflowed; using uniform weights\n";
    out.component_weights = Vector::Constant(m_count, 1.0 / static_cast<double>(m_count));
  } else {
    out.component_weights = (log_resp.array() - norm).exp();
    out.component_weights /= out.component_weights.sum();
  }
  return out;
}

}  // namespace smc_optl
