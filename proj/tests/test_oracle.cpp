#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "kme/embedding.hpp"
#include "kme/oracle.hpp"

using namespace kme;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace

TEST(BochnerOracle, ZeroShiftIsZero) {
  const auto k = make_matern_kernel(3, 1.0, 3.0);
  const IsotropicGaussian g{vec({0.1, 0.2, 0.3}), 0.5};
  const auto r = bochner_rkhs_oracle(k, g, g);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(l2_dist_oracle(k, g, g).value, 0.0);
}

TEST(BochnerOracle, GaussianOneDimensionMatchesClosedForm) {
  const auto k = make_gaussian_kernel(1, 1.0);
  const IsotropicGaussian g0{vec({0.0}), 1.0};
  const IsotropicGaussian g1{vec({1.0}), 1.0};
  const auto r = bochner_rkhs_oracle(k, g0, g1);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.value, 2.0 / std::sqrt(3.0) * (1.0 - std::exp(-1.0 / 6.0)), 1e-8);
  const auto l = l2_dist_oracle(k, g0, g1);
  ASSERT_TRUE(l.converged);
  EXPECT_NEAR(l.value, 2.0 * std::sqrt(M_PI / 2.0) * (1.0 - std::exp(-0.125)), 1e-8);
}

TEST(BochnerOracle, RadialReductionMatchesFullMonteCarloInThreeDimensions) {
  // Gaussian kernel eta = 1: (2 pi)^{-3/2} lambda(w) dw is the N(0, I) law, so
  // the integral is E[e^{-s2 |W|^2} 2 (1 - cos<dmu, W>)] with W ~ N(0, I).
  const auto k = make_gaussian_kernel(3, 1.0);
  const double s2 = 0.7;
  const Eigen::VectorXd dmu = vec({0.8, -0.3, 0.5});
  const auto r = bochner_rkhs_oracle(k, {Eigen::VectorXd::Zero(3), s2}, {dmu, s2});
  ASSERT_TRUE(r.converged);
  Sampler draw = [&](std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    const Eigen::VectorXd w = vec({z(rng), z(rng), z(rng)});
    return std::exp(-s2 * w.squaredNorm()) * 2.0 * (1.0 - std::cos(dmu.dot(w)));
  };
  const McGate gate = mc_gate(r.value, draw, 1000000, 21);
  EXPECT_TRUE(gate.passed) << "z = " << gate.z;
}

TEST(L2Oracle, GridConvolutionThirdPath) {
  // Embed each Gaussian by Gauss-Hermite convolution on a grid and integrate
  // the squared difference; shares nothing with either other route.
  const auto k = make_imq_kernel(1, 1.0, 1.0);
  const double s2 = 0.5;
  const IsotropicGaussian g0{vec({0.0}), s2};
  const IsotropicGaussian g1{vec({1.2}), s2};
  auto embed = [&](const IsotropicGaussian& g, double y) {
    return gauss_hermite_expect([&](const Eigen::VectorXd& x) { return eval_psi(k, (y - x(0)) * (y - x(0))); }, g, 80);
  };
  // The integrand is analytic with |y|^{-6} tails: a midpoint rule with h = 0.05
  // on [-200, 200] is accurate far below the tolerance.
  const double L = 200.0;
  const int steps = 8000;
  const double h = 2 * L / steps;
  double grid = 0.0;
  for (int i = 0; i < steps; ++i) {
    const double y = -L + (i + 0.5) * h;
    const double f = embed(g0, y) - embed(g1, y);
    grid += f * f * h;
  }
  const auto r = l2_dist_oracle(k, g0, g1);
  ASSERT_TRUE(r.converged);
  EXPECT_NEAR(r.value, grid, 1e-6);
  EXPECT_NEAR(l2_gauss_dist2(k, g0, g1), grid, 1e-6);
}

TEST(GaussHermite, ConstantAndSelfConvergence) {
  const IsotropicGaussian g{vec({0.3, -0.2}), 0.8};
  EXPECT_NEAR(gauss_hermite_expect([](const Eigen::VectorXd&) { return 1.0; }, g, 5), 1.0, 1e-14);
  auto smooth = [](const Eigen::VectorXd& x) { return std::cos(x(0)) * std::exp(-0.3 * x(1) * x(1)); };
  EXPECT_NEAR(gauss_hermite_expect(smooth, g, 20), gauss_hermite_expect(smooth, g, 40), 1e-10);
  // E cos(X) = cos(mu) e^{-s2/2}; E e^{-a Y^2} = (1 + 2 a s2)^{-1/2} e^{-a mu^2 / (1 + 2 a s2)}.
  const double expect = std::cos(0.3) * std::exp(-0.4) * std::pow(1.48, -0.5) * std::exp(-0.3 * 0.04 / 1.48);
  EXPECT_NEAR(gauss_hermite_expect(smooth, g, 40), expect, 1e-12);
}

TEST(MonteCarlo, ConstantDeterminismAndStandardError) {
  const McEstimate one = mc_expect([](std::mt19937_64&) { return 1.0; }, 1000, 1);
  EXPECT_DOUBLE_EQ(one.mean, 1.0);
  EXPECT_EQ(one.std_error, 0.0);
  Sampler u = [](std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0, 1)(rng); };
  const McEstimate a = mc_expect(u, 100000, 9);
  const McEstimate b = mc_expect(u, 100000, 9);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_NEAR(a.std_error, std::sqrt(1.0 / 12.0 / 100000.0), 0.02 * std::sqrt(1.0 / 12.0 / 100000.0));
}

TEST(MonteCarlo, DoubleExpectationMatchesSelfInner) {
  const auto k = make_imq_kernel(2, 1.0, 1.5);
  const IsotropicGaussian g{vec({0.4, 0.1}), 0.6};
  Sampler draw = [&](std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, std::sqrt(0.6));
    const Eigen::VectorXd x = vec({z(rng), z(rng)});
    const Eigen::VectorXd y = vec({z(rng), z(rng)});
    return eval_psi(k, (x - y).squaredNorm());
  };
  const McGate gate = mc_gate(rkhs_gauss_inner(k, g, g), draw, 1000000, 4);
  EXPECT_TRUE(gate.passed) << "z = " << gate.z;
}

TEST(MonteCarlo, GateRejectsAWrongReference) {
  Sampler u = [](std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0, 1)(rng); };
  EXPECT_TRUE(mc_gate(0.5, u, 200000, 2).passed);
  EXPECT_FALSE(mc_gate(0.51, u, 200000, 2).passed);
}
