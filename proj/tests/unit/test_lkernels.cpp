#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "smc_optl/lkernels.hpp"
#include "test_oracles.hpp"

namespace {

using namespace smc_optl;
using smc_optl::testing::trapezoid;

// Pairs from x1 ~ N(0, 1), x2 | x1 ~ N(x1, 1).
void illustrative_pairs(Eigen::Index n, Rng& rng, Positions& prev, Positions& curr) {
  std::normal_distribution<double> normal;
  prev.resize(n, 1);
  curr.resize(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    prev(i, 0) = normal(rng);
    curr(i, 0) = prev(i, 0) + normal(rng);
  }
}

JointBlocks illustrative_joint() {
  return {Vector{{0.0}}, Vector{{0.0}}, Matrix{{1.0}}, Matrix{{1.0}}, Matrix{{1.0}}, Matrix{{2.0}}};
}

TEST(LKernelStrategy, ParseAndName) {
  EXPECT_EQ(LKernelStrategy::parse("forward"), LKernelStrategy::forward_proposal());
  EXPECT_EQ(LKernelStrategy::parse("gauss-opt"), LKernelStrategy::gaussian_opt());
  EXPECT_EQ(LKernelStrategy::parse("gmm-opt:2"), LKernelStrategy::gmm_opt(2));
  EXPECT_EQ(LKernelStrategy::gmm_opt(3).name(), "gmm-opt:3");
  EXPECT_THROW(LKernelStrategy::parse("gmm-opt:0"), InvalidArgumentError);
  EXPECT_THROW(LKernelStrategy::parse("gmm-opt:x"), InvalidArgumentError);
  EXPECT_THROW(LKernelStrategy::parse("optimal"), InvalidArgumentError);
}

TEST(FitLKernel, ForwardProposalNeedsNoFit) {
  Rng rng(0);
  Positions prev, curr;
  illustrative_pairs(10, rng, prev, curr);
  EXPECT_TRUE(fit_lkernel(LKernelStrategy::forward_proposal(), prev, curr, rng).empty());
}

TEST(FitLKernel, GaussianOptRecoversIllustrativeJoint) {
  Rng rng(1);
  Positions prev, curr;
  illustrative_pairs(100000, rng, prev, curr);
  const FittedLKernel fit = fit_lkernel(LKernelStrategy::gaussian_opt(), prev, curr, rng);
  const auto& j = std::get<JointBlocks>(fit.fit());
  EXPECT_NEAR(j.mu_prev[0], 0.0, 0.02);
  EXPECT_NEAR(j.mu_curr[0], 0.0, 0.02);
  EXPECT_NEAR(j.S_pp(0, 0), 1.0, 0.02);
  EXPECT_NEAR(j.S_pc(0, 0), 1.0, 0.02);
  EXPECT_NEAR(j.S_cc(0, 0), 2.0, 0.02);
}

TEST(FitLKernel, SingleComponentMixtureEqualsGaussianOpt) {
  Rng data(2);
  Positions prev, curr;
  illustrative_pairs(500, data, prev, curr);
  Rng rng_a(7), rng_b(7);
  const FittedLKernel gauss = fit_lkernel(LKernelStrategy::gaussian_opt(), prev, curr, rng_a);
  const FittedLKernel gmm = fit_lkernel(LKernelStrategy::gmm_opt(1), prev, curr, rng_b);
  const Matrix rw{{1.0}};
  for (double a : {-2.0, 0.0, 0.7}) {
    for (double b : {-1.0, 0.3, 2.5}) {
      EXPECT_NEAR(log_lkernel(gauss, rw, Vector{{a}}, Vector{{b}}), log_lkernel(gmm, rw, Vector{{a}}, Vector{{b}}),
                  1e-10);
    }
  }
}

TEST(FitLKernel, MismatchedShapes) {
  Rng rng(0);
  EXPECT_THROW(fit_lkernel(LKernelStrategy::gaussian_opt(), Positions::Zero(5, 1), Positions::Zero(4, 1), rng),
               DimensionMismatchError);
}

TEST(LogLKernel, ForwardProposalIsSymmetricRandomWalk) {
  const FittedLKernel none;
  const Matrix rw{{0.7, 0.2}, {0.2, 1.1}};
  const Vector a{{0.5, -1.0}};
  const Vector b{{1.5, 0.25}};
  const double ab = log_lkernel(none, rw, a, b);
  EXPECT_NEAR(ab, gaussian_log_pdf({b, rw}, a), 1e-14);
  EXPECT_NEAR(ab, log_lkernel(none, rw, b, a), 1e-14);
}

TEST(LogLKernel, GaussianOptIllustrativeClosedForm) {
  const FittedLKernel fit(illustrative_joint());
  const double expected = -0.5 * std::log(2 * std::numbers::pi * 0.5);  // N(0.5; 0.5, 0.5)
  EXPECT_NEAR(log_lkernel(fit, Matrix{{1.0}}, Vector{{0.5}}, Vector{{1.0}}), expected, 1e-13);
}

TEST(LogLKernel, MixtureWithOneDominantComponentMatchesThatComponent) {
  const GaussianParams near{Vector{{100.0, 100.0}}, Matrix{{1.0, 0.6}, {0.6, 1.0}}};
  const GaussianParams far{Vector{{-100.0, -100.0}}, Matrix{{2.0, 0.5}, {0.5, 1.5}}};
  const FittedLKernel mixture(GmmParams{Vector{{0.4, 0.6}}, {near, far}});
  const FittedLKernel single(JointBlocks::partition(near));
  const Matrix rw{{1.0}};
  for (double a : {98.0, 100.0, 101.5}) {
    for (double b : {99.0, 100.5}) {
      EXPECT_NEAR(log_lkernel(mixture, rw, Vector{{a}}, Vector{{b}}), log_lkernel(single, rw, Vector{{a}}, Vector{{b}}),
                  1e-10);
    }
  }
}

TEST(LogLKernel, EveryVariantIntegratesToOneOverPrevious) {
  Rng rng(3);
  Positions prev, curr;
  illustrative_pairs(400, rng, prev, curr);
  const Matrix rw{{1.0}};
  const std::vector<FittedLKernel> kernels{
      FittedLKernel(),
      fit_lkernel(LKernelStrategy::gaussian_opt(), prev, curr, rng),
      fit_lkernel(LKernelStrategy::gmm_opt(2), prev, curr, rng),
      FittedLKernel(GmmParams{Vector{{0.5, 0.5}},
                              {GaussianParams{Vector{{-3.0, -3.0}}, Matrix{{1.0, 0.95}, {0.95, 1.0}}},
                               GaussianParams{Vector{{3.0, 3.0}}, Matrix{{1.0, 0.95}, {0.95, 1.0}}}}}),
  };
  for (const auto& k : kernels) {
    for (double x_curr : {-2.0, 0.0, 1.3}) {
      const double mass = trapezoid(
          [&](double a) { return std::exp(log_lkernel(k, rw, Vector{{a}}, Vector{{x_curr}})); }, -30.0, 30.0, 60001);
      EXPECT_NEAR(mass, 1.0, 1e-6);
    }
  }
}

TEST(LogLKernel, ForwardProposalIgnoresPopulation) {
  Rng rng(4);
  Positions p1, c1, p2, c2;
  illustrative_pairs(50, rng, p1, c1);
  illustrative_pairs(50, rng, p2, c2);
  p2.array() += 10.0;
  const Matrix rw{{0.5}};
  const double a = log_lkernel(fit_lkernel(LKernelStrategy::forward_proposal(), p1, c1, rng), rw, Vector{{0.1}},
                               Vector{{0.4}});
  const double b = log_lkernel(fit_lkernel(LKernelStrategy::forward_proposal(), p2, c2, rng), rw, Vector{{0.1}},
                               Vector{{0.4}});
  EXPECT_EQ(a, b);
}

}  // namespace
