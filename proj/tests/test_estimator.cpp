#include <gtest/gtest.h>

#include <cmath>

#include "kme/errors.hpp"
#include "kme/estimator.hpp"

using namespace kme;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

RateExperimentConfig small_config() {
  RateExperimentConfig c;
  c.kernel = make_gaussian_kernel(1, 1.0);
  c.target = IsotropicGaussian{vec({0.0}), 1.0};
  c.n_grid = {64, 128, 256, 512, 1024, 2048};
  c.replicates = 200;
  c.norms = {Norm::rkhs, Norm::l2};
  c.bootstrap_resamples = 200;
  return c;
}

}  // namespace

TEST(Sampling, ReproducibleForFixedSeed) {
  const Target t = IsotropicGaussian{vec({1.0, -1.0}), 0.5};
  const auto a = sample_target(t, 3, 42);
  const auto b = sample_target(t, 3, 42);
  ASSERT_EQ(a.points.rows(), 3);
  EXPECT_EQ(a.points, b.points);
  EXPECT_NEAR(a.weights.sum(), 1.0, 1e-15);
  EXPECT_NE(a.points, sample_target(t, 3, 43).points);
}

TEST(Sampling, TwoPointDrawsOnlyAtoms) {
  const Target t = TwoPointDiscrete{vec({0.0}), vec({3.0}), 0.3};
  const auto s = sample_target(t, 2000, 1);
  int at_x = 0;
  for (Eigen::Index i = 0; i < s.points.rows(); ++i) {
    ASSERT_TRUE(s.points(i, 0) == 0.0 || s.points(i, 0) == 3.0);
    at_x += s.points(i, 0) == 0.0;
  }
  EXPECT_NEAR(at_x / 2000.0, 0.3, 4 * std::sqrt(0.3 * 0.7 / 2000));
}

TEST(EmpiricalError, ExactAtomsGiveZero) {
  const TwoPointDiscrete t{vec({0.0, 1.0}), vec({2.0, -1.0}), 0.35};
  const auto k = make_matern_kernel(2, 1.0, 2.5);
  for (Norm norm : {Norm::rkhs, Norm::l2}) EXPECT_NEAR(empirical_error(k, as_weighted(t), t, norm), 0.0, 1e-7);
}

TEST(EmpiricalError, SingleGaussianSampleThreeTermFormula) {
  const auto k = make_gaussian_kernel(1, 1.0);
  const IsotropicGaussian g{vec({0.0}), 1.0};
  const auto one = uniform_measure(Eigen::MatrixXd::Constant(1, 1, 0.7));
  // k(x,x) - 2 <k(., x), theta> + |theta|^2 with atom t = 1/2, s2 = 1.
  const double hand = 1.0 - 2.0 * std::exp(-0.49 / 4.0) / std::sqrt(2.0) + 1.0 / std::sqrt(3.0);
  EXPECT_NEAR(empirical_error(k, one, g, Norm::rkhs), std::sqrt(hand), 1e-14);
}

TEST(EmpiricalError, MultiNormMatchesSingleNorm) {
  const auto k = make_imq_kernel(2, 1.0, 2.0);
  const Target t = IsotropicGaussian{vec({0.5, 0.0}), 0.8};
  const auto s = sample_target(t, 12, 5);
  const auto both = empirical_errors(k, s, t, {Norm::rkhs, Norm::l2});
  EXPECT_NEAR(both[0], empirical_error(k, s, t, Norm::rkhs), 1e-12);
  EXPECT_NEAR(both[1], empirical_error(k, s, t, Norm::l2), 1e-12);
}

TEST(Hoeffding, ForcedArithmetic) {
  EXPECT_NEAR(hoeffding_bound(1.0, 100, 1.0), 0.1, 1e-15);
  EXPECT_NEAR(hoeffding_bound(1.0, 100, std::exp(-0.5)), 0.2, 1e-15);
  EXPECT_THROW(hoeffding_bound(1.0, 100, 0.0), ArgumentError);
  EXPECT_THROW(hoeffding_bound(1.0, 0, 0.5), ArgumentError);
  EXPECT_THROW(hoeffding_bound(-1.0, 10, 0.5), ArgumentError);
}

TEST(LineFit, ExactLineAndDegenerateInput) {
  const auto f = fit_line({0.0, 1.0, 2.0, 3.0}, {1.0, -1.0, -3.0, -5.0});
  EXPECT_NEAR(f.slope, -2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
  EXPECT_THROW(fit_line({1.0, 1.0}, {2.0, 3.0}), ArgumentError);
}

TEST(RateExperiment, SingleSampleSizeHasNoSlope) {
  auto c = small_config();
  c.n_grid = {64};
  c.replicates = 10;
  c.norms = {Norm::rkhs};
  const auto r = run_rate_experiment(c);
  EXPECT_FALSE(r.slope.has_value());
  EXPECT_FALSE(r.slope_ci_lo.has_value());
  EXPECT_EQ(r.errors.front().size(), 10u);
}

TEST(RateExperiment, ResultsDoNotDependOnWorkerCount) {
  auto c = small_config();
  c.n_grid = {32, 64, 128};
  c.replicates = 30;
  c.jobs = 1;
  const auto a = run_rate_experiments(c);
  c.jobs = 3;
  const auto b = run_rate_experiments(c);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].errors, b[i].errors);
    EXPECT_EQ(*a[i].slope, *b[i].slope);
    EXPECT_EQ(*a[i].slope_ci_lo, *b[i].slope_ci_lo);
  }
}

TEST(RateExperiment, RootNSlopeInBothNorms) {
  const auto reports = run_rate_experiments(small_config());
  ASSERT_EQ(reports.size(), 2u);
  for (const auto& r : reports) {
    ASSERT_TRUE(r.slope.has_value());
    EXPECT_GE(*r.slope, -0.60) << norm_name(r.norm);
    EXPECT_LE(*r.slope, -0.40) << norm_name(r.norm);
    EXPECT_LE(*r.slope_ci_lo, *r.slope);
    EXPECT_GE(*r.slope_ci_hi, *r.slope);
  }
}

TEST(RateExperiment, TwoPointTargetAlsoShowsRootNRate) {
  auto c = small_config();
  c.kernel = make_matern_kernel(1, 1.0, 2.0);
  c.target = TwoPointDiscrete{vec({0.0}), vec({1.5}), 0.4};
  const auto reports = run_rate_experiments(c);
  for (const auto& r : reports) {
    EXPECT_GE(*r.slope, -0.60) << norm_name(r.norm);
    EXPECT_LE(*r.slope, -0.40) << norm_name(r.norm);
  }
}

TEST(RateExperiment, RejectsBadConfigs) {
  auto c = small_config();
  c.n_grid = {};
  EXPECT_THROW(validate_rate_config(c), ArgumentError);
  c = small_config();
  c.replicates = 0;
  EXPECT_THROW(validate_rate_config(c), ArgumentError);
  c = small_config();
  c.target = IsotropicGaussian{vec({0.0, 0.0}), 1.0};
  EXPECT_THROW(validate_rate_config(c), ArgumentError);
}

TEST(Coverage, ReportIsInternallyConsistent) {
  const auto k = make_gaussian_kernel(1, 1.0);
  const auto r = coverage_experiment(k, IsotropicGaussian{vec({0.0}), 1.0}, 64, 0.2, 100, 3);
  EXPECT_EQ(r.replicates, 100);
  EXPECT_DOUBLE_EQ(r.frequency, r.exceedances / 100.0);
  EXPECT_DOUBLE_EQ(r.bound, hoeffding_bound(1.0, 64, 0.2));
  EXPECT_LE(r.frequency, 0.2 + 3 * std::sqrt(0.2 * 0.8 / 100));
}
