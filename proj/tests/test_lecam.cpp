#include <gtest/gtest.h>

#include <cmath>

#include "kme/errors.hpp"
#include "kme/lecam.hpp"
#include "kme/sweep.hpp"

using namespace kme;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

HardFamily scale_means(HardFamily f, double factor) {
  for (auto& h : f.hypotheses) {
    auto& g = std::get<IsotropicGaussian>(h);
    g.mu *= factor;
  }
  return f;
}

}  // namespace

TEST(TestingFloors, TwoHypotheses) {
  // At alpha = 4/9: (1 - sqrt(2)/3)/2 = 0.2643 beats e^{-4/9}/4 = 0.160.
  EXPECT_NEAR(lecam_two(4.0 / 9.0), (1 - std::sqrt(2.0) / 3) / 2, 1e-15);
  EXPECT_GT(lecam_two(4.0 / 9.0), 0.25);
  EXPECT_NEAR(lecam_two(1e-14), 0.5, 1e-6);
  EXPECT_NEAR(lecam_two(10.0), 0.25 * std::exp(-10.0), 1e-18);
  double prev = 1.0;
  for (double a = 0.01; a < 20; a *= 1.3) {
    const double v = lecam_two(a);
    EXPECT_LE(v, prev);
    prev = v;
  }
  EXPECT_THROW(lecam_two(0.0), ArgumentError);
}

TEST(TestingFloors, ManyHypotheses) {
  EXPECT_GE(lecam_many(1000000, 0.125), 0.2);
  const double r2 = std::sqrt(2.0);
  EXPECT_NEAR(lecam_many(2, 1e-12), r2 / (1 + r2), 1e-5);
  for (long M : {2L, 10L, 1000L}) {
    double prev = 1.0;
    for (double a = 0.001; a <= 0.125; a += 0.004) {
      const double v = lecam_many(M, a);
      EXPECT_LE(v, prev);
      prev = v;
    }
  }
  EXPECT_THROW(lecam_many(1, 0.1), ArgumentError);
  EXPECT_THROW(lecam_many(5, 0.2), ArgumentError);
  EXPECT_THROW(lecam_many(5, 0.0), ArgumentError);
}

TEST(Divergences, IsotropicGaussianProducts) {
  const Eigen::VectorXd m0 = vec({0.0, 0.0});
  const Eigen::VectorXd m1 = vec({0.06, 0.08});  // |dmu|^2 = 0.01
  EXPECT_NEAR(kl_gauss_iso(m0, m1, 1.0, 100), 0.5, 1e-14);
  EXPECT_NEAR(kl_gauss_iso(m0, m1, 1.0, 300), 3 * kl_gauss_iso(m0, m1, 1.0, 100), 1e-14);
  EXPECT_NEAR(kl_gauss_iso(m0, m1, 0.5, 100), 1.0, 1e-14);
  EXPECT_THROW(kl_gauss_iso(m0, vec({1.0}), 1.0, 1), ArgumentError);
  EXPECT_THROW(kl_gauss_iso(m0, m1, 0.0, 1), ArgumentError);
}

TEST(Divergences, TwoPointBoundDominatesExactValue) {
  // p0 = 1/2 + 1/(3 sqrt n), p1 = 1/2: bound = n (1/(9n)) / (1/4) = 4/9.
  for (long n : {1L, 10L, 1000L}) {
    const auto r = kl_two_point_bound(0.5 + 1 / (3 * std::sqrt(double(n))), 0.5, n);
    EXPECT_NEAR(r.bound, 4.0 / 9.0, 1e-13);
  }
  for (double p0 = 0.05; p0 < 1; p0 += 0.05) {
    for (double p1 = 0.07; p1 < 1; p1 += 0.11) {
      const auto r = kl_two_point_bound(p0, p1, 7);
      const double kl = 7 * (p0 * std::log(p0 / p1) + (1 - p0) * std::log((1 - p0) / (1 - p1)));
      EXPECT_NEAR(r.exact, kl, 1e-12);
      EXPECT_LE(r.exact, r.bound + 1e-12);
    }
  }
  EXPECT_THROW(kl_two_point_bound(0.0, 0.5, 3), ArgumentError);
}

TEST(Packing, CertifiedCountRadiusAndSpacing) {
  for (int d : {1, 2, 3}) {
    for (double radius : {1e-4, 0.3, 5.0}) {
      const auto pts = pack_ball(d, radius, 5);
      EXPECT_GE(pts.rows(), static_cast<Eigen::Index>(std::pow(5, d)));
      const auto c = scan_packing(pts);
      EXPECT_LE(c.max_norm, radius * (1 + 1e-12));
      EXPECT_GE(c.min_distance, radius / 5 * (1 - 1e-12));
    }
  }
  const auto capped = pack_ball_capped(6, 1.0, 5, 125);
  EXPECT_EQ(capped.rows(), 125);
  EXPECT_GE(scan_packing(capped).min_distance, 0.2 * (1 - 1e-12));
  EXPECT_THROW(pack_ball(2, 1.0, 2), ArgumentError);
  EXPECT_THROW(pack_ball(7, 1.0, 5), ArgumentError);
}

TEST(HardFamilies, OneDimensionalShape) {
  const auto f = build_hard_family_thm8(make_gaussian_kernel(1, 1.0), 100, Norm::rkhs);
  EXPECT_EQ(f.hypotheses.size(), 5u);
  EXPECT_EQ(f.M, 4);
  const auto r = verify_hard_family(f);
  EXPECT_NEAR(r.kl_budget, std::log(4.0) / 8, 1e-15);
  EXPECT_GE(f.construction_s, f.s);
}

TEST(HardFamilies, AllReferenceKernelsPass) {
  for (int d : {1, 2, 3}) {
    for (KernelFamily fam : reference_families()) {
      const auto k = reference_kernel(fam, d);
      for (long n : {10L, 100L, 1000L}) {
        for (Norm norm : {Norm::rkhs, Norm::l2}) {
          const auto r = verify_hard_family(build_hard_family_thm8(k, n, norm), norm == Norm::rkhs);
          EXPECT_TRUE(r.all_pass()) << kernel_label(k) << " n=" << n << ' ' << norm_name(norm);
          EXPECT_GE(r.min_pairwise_distance, r.required_separation);
          EXPECT_LE(r.mean_kl, r.kl_budget);
          EXPECT_LE(r.max_closeness, r.closeness_limit);
          const auto t = verify_hard_family(build_two_point_family(k, n, norm));
          EXPECT_TRUE(t.all_pass()) << "two-point " << kernel_label(k) << " n=" << n << ' ' << norm_name(norm);
        }
      }
    }
  }
}

TEST(HardFamilies, MutationsMoveTheRightQuantities) {
  const auto f = build_hard_family_thm8(make_gaussian_kernel(2, 1.0), 100, Norm::rkhs);
  const auto base = verify_hard_family(f);
  const auto doubled = verify_hard_family(scale_means(f, 2.0));
  EXPECT_NEAR(doubled.mean_kl, 4 * base.mean_kl, 1e-12 * base.mean_kl);
  const auto halved = verify_hard_family(scale_means(f, 0.5));
  EXPECT_LT(halved.min_pairwise_distance, base.min_pairwise_distance);
  // Large enough dilation must exceed the KL budget.
  const double factor = 1.01 * std::sqrt(base.kl_budget / base.mean_kl);
  EXPECT_FALSE(verify_hard_family(scale_means(f, factor)).kl_ok);
}

TEST(Stress, EstimatorsAgainstTheFloor) {
  const auto f = build_hard_family_thm8(make_gaussian_kernel(1, 1.0), 100, Norm::rkhs);
  const auto zero = minimax_stress("zero", f, 50, 3);
  EXPECT_DOUBLE_EQ(zero.worst_case, 1.0);
  const auto emp = minimax_stress("empirical", f, 200, 3);
  EXPECT_EQ(emp.exceedance.size(), f.hypotheses.size());
  EXPECT_GE(emp.worst_case, f.probability_floor - 0.06);
  const auto again = minimax_stress("empirical", f, 200, 3, 2);
  EXPECT_EQ(emp.exceedance, again.exceedance);
  EXPECT_THROW(minimax_stress("empirical", f, 0, 3), ArgumentError);
  EXPECT_THROW(minimax_stress("median", f, 10, 3), ArgumentError);
}
