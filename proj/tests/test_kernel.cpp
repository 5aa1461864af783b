#include <gtest/gtest.h>

#include <cmath>

#include "kme/errors.hpp"
#include "kme/kernel.hpp"

using namespace kme;

namespace {

// Midpoint rule on [-L, L]; crude but independent of the library quadrature.
template <class F>
double line_integral(F f, double L, int steps) {
  const double h = 2.0 * L / steps;
  double sum = 0.0;
  for (int i = 0; i < steps; ++i) sum += f(-L + (i + 0.5) * h);
  return sum * h;
}

double matern_bessel(double c, double a, double r) {
  if (r == 0.0) return 1.0;
  return 2.0 * std::pow(0.5 * c * r, a) * std::cyl_bessel_k(a, c * r) / std::tgamma(a);
}

}  // namespace

TEST(KernelPsi, GaussianAtOriginIsTotalMass) {
  for (double eta : {0.3, 1.0, 2.5}) EXPECT_DOUBLE_EQ(eval_psi(make_gaussian_kernel(2, eta), 0.0), 1.0);
}

TEST(KernelPsi, GaussianMatchesExponential) {
  const auto k = make_gaussian_kernel(3, 1.7);
  for (double r2 : {0.0, 0.4, 3.0, 20.0}) EXPECT_NEAR(eval_psi(k, r2), std::exp(-r2 / (2.0 * 1.7 * 1.7)), 1e-15);
}

TEST(KernelPsi, InverseMultiquadricAtThree) {
  EXPECT_NEAR(eval_psi(make_imq_kernel(1, 1.0, 1.0), 3.0), 0.25, 1e-10);
}

TEST(KernelPsi, InverseMultiquadricMatchesPowerLaw) {
  for (double c : {0.5, 1.0, 2.0}) {
    for (double g : {0.3, 1.0, 2.5}) {
      const auto k = make_imq_kernel(2, c, g);
      for (double r2 : {0.0, 0.7, 5.0, 40.0}) {
        const double expect = std::pow(c * c + r2, -g);
        EXPECT_NEAR(eval_psi(k, r2), expect, 1e-9 * expect) << "c=" << c << " gamma=" << g << " r2=" << r2;
      }
    }
  }
}

TEST(KernelPsi, MaternMatchesBesselForm) {
  // tau = d/2 + 1, c = 2, d = 1 is the documented example; the others widen coverage.
  struct Case {
    int d;
    double c, tau;
  };
  for (const Case& cs : {Case{1, 2.0, 1.5}, Case{2, 1.0, 2.5}, Case{3, 0.7, 1.9}}) {
    const auto k = make_matern_kernel(cs.d, cs.c, cs.tau);
    for (double r2 : {0.0, 0.01, 1.0, 9.0}) {
      const double expect = matern_bessel(cs.c, cs.tau - 0.5 * cs.d, std::sqrt(r2));
      EXPECT_NEAR(eval_psi(k, r2), expect, 1e-9) << "d=" << cs.d << " r2=" << r2;
    }
  }
}

TEST(KernelPsi, PsiGapIsDifferenceFromOrigin) {
  const auto k = make_matern_kernel(2, 1.0, 2.0);
  for (double r2 : {0.3, 4.0}) EXPECT_NEAR(eval_psi_gap(k, r2), eval_psi(k, 0.0) - eval_psi(k, r2), 1e-9);
}

TEST(KernelPsi, PsiGapKeepsRelativeAccuracyNearOrigin) {
  // Small-x series of 1 - x K_1(x): -(x^2/2)(log(x/2) + euler_gamma - 1/2) + O(x^4 log x).
  const auto k = make_matern_kernel(2, 1.0, 2.0);
  const double x = 1e-4;
  const double series = -0.5 * x * x * (std::log(0.5 * x) + 0.57721566490153286 - 0.5);
  // The quadrature targets 1e-10 absolute; the naive difference is off by ~1e-2 relative here.
  EXPECT_NEAR(eval_psi_gap(k, x * x), series, 1e-4 * series);
  const auto g = make_gaussian_kernel(3, 1.0);
  EXPECT_NEAR(eval_psi_gap(g, 1e-12), 0.5e-12, 1e-24);
}

TEST(KernelConstruction, RejectsInvalidParameters) {
  EXPECT_THROW(make_matern_kernel(2, 1.0, 1.0), ArgumentError);
  EXPECT_THROW(make_matern_kernel(4, 1.0, 1.5), ArgumentError);
  EXPECT_THROW(make_gaussian_kernel(0, 1.0), ArgumentError);
  EXPECT_THROW(make_gaussian_kernel(1, -1.0), ArgumentError);
  EXPECT_THROW(make_mixture_kernel(1, {0.5}, {1.0, 2.0}), ArgumentError);
  EXPECT_THROW(make_imq_kernel(1, 1.0, 0.0), ArgumentError);
  NuMeasure only_zero;
  only_zero.atoms.push_back({0.0, 1.0});
  EXPECT_THROW(make_custom_kernel(1, only_zero), ArgumentError);
  EXPECT_THROW(family_from_name("laplace"), ArgumentError);
}

TEST(SpectralDensity, GaussianAtZeroIsEtaToTheD) {
  for (int d : {1, 2, 4}) EXPECT_NEAR(spectral_density(make_gaussian_kernel(d, 1.3), 0.0), std::pow(1.3, d), 1e-13);
}

TEST(SpectralDensity, GaussianUnitBandwidthAtFour) {
  EXPECT_NEAR(spectral_density(make_gaussian_kernel(1, 1.0), 4.0), std::exp(-2.0), 1e-15);
}

TEST(SpectralDensity, MixtureIsSumOfComponents) {
  const auto m = make_mixture_kernel(2, {0.6, 0.4}, {1.0, 0.5});
  for (double w2 : {0.0, 1.0, 7.0}) {
    const double expect = 0.6 * spectral_density(make_gaussian_kernel(2, 1.0), w2) +
                          0.4 * spectral_density(make_gaussian_kernel(2, 0.5), w2);
    EXPECT_NEAR(spectral_density(m, w2), expect, 1e-14);
  }
}

TEST(SpectralDensity, MatchesNumericalFourierTransformInOneDimension) {
  // (2 pi)^{-1/2} int psi(x) cos(w x) dx by a fine midpoint rule.
  const auto g = make_gaussian_kernel(1, 0.8);
  const auto imq = make_imq_kernel(1, 1.0, 1.0);
  for (double w : {0.0, 0.5, 2.0}) {
    const double ft = line_integral([&](double x) { return eval_psi(g, x * x) * std::cos(w * x); }, 12.0, 24000) /
                      std::sqrt(2.0 * M_PI);
    EXPECT_NEAR(spectral_density(g, w * w), ft, 1e-10);
    // int cos(w x)/(1 + x^2) dx = pi e^{-|w|}.
    EXPECT_NEAR(spectral_density(imq, w * w), std::sqrt(M_PI / 2.0) * std::exp(-w), 1e-9);
  }
}

TEST(KernelConstants, GaussianAndMixtureTotals) {
  EXPECT_DOUBLE_EQ(kernel_constants(make_gaussian_kernel(3, 0.4)).C_k_rkhs, 1.0);
  EXPECT_NEAR(kernel_constants(make_mixture_kernel(2, {0.6, 0.9}, {1.0, 0.5})).C_k_rkhs, 1.5, 1e-15);
}

TEST(KernelConstants, InverseMultiquadricSquaredNorm) {
  const auto kc = kernel_constants(make_imq_kernel(1, 1.0, 1.0));
  ASSERT_TRUE(kc.psi_l2_sq.has_value());
  EXPECT_NEAR(*kc.psi_l2_sq, M_PI / 2.0, 1e-12);
  const double numeric = line_integral([](double x) { return 1.0 / ((1 + x * x) * (1 + x * x)); }, 2000.0, 4000000);
  EXPECT_NEAR(*kc.psi_l2_sq, numeric, 1e-6);
}

TEST(KernelConstants, QuadratureRouteAgreesWithImqClosedForm) {
  // Custom nu equal to the IMQ measure forces the generic double integral.
  const auto imq = make_imq_kernel(2, 1.3, 1.7);
  const auto custom = make_custom_kernel(2, imq.nu);
  EXPECT_NEAR(*kernel_constants(custom).psi_l2_sq, *kernel_constants(imq).psi_l2_sq, 1e-8);
}

TEST(IntervalMass, AtomsAndEmptyIntervals) {
  const auto g = make_gaussian_kernel(1, 1.0);  // atom at 1/2
  EXPECT_DOUBLE_EQ(nu_interval_mass(g, 0.25, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(nu_interval_mass(g, 0.5, 0.5), 1.0);
  EXPECT_DOUBLE_EQ(nu_interval_mass(g, 0.6, 0.6), 0.0);
  EXPECT_THROW(nu_interval_mass(g, 1.0, 0.5), ArgumentError);
}

TEST(IntervalMass, GammaComponentMatchesQuadrature) {
  const auto k = make_imq_kernel(1, 1.0, 2.0);
  const double lo = 0.3;
  const double hi = 2.2;
  const auto r = integrate_nu(k.nu, [&](double t) { return (t >= lo && t <= hi) ? 1.0 : 0.0; });
  EXPECT_NEAR(nu_interval_mass(k, lo, hi), r.value, 1e-6);
}

TEST(IntegrateNu, ConstantOnAtomsGivesTotalMass) {
  const auto m = make_mixture_kernel(1, {0.25, 0.5}, {1.0, 3.0});
  const auto r = integrate_nu(m.nu, [](double) { return 1.0; });
  EXPECT_DOUBLE_EQ(r.value, 0.75);
  EXPECT_TRUE(r.converged);
}

TEST(IntegrateNu, LaplaceTransformOfGamma) {
  const auto r = integrate_nu(make_imq_kernel(1, 1.0, 1.0).nu, [](double t) { return std::exp(-t); });
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.value, 0.5, 1e-10);
}

TEST(IntegrateNu, ConvergedFlagIsHonestForSpikyIntegrands) {
  const auto k = make_imq_kernel(1, 1.0, 1.5);
  QuadratureOptions opts;
  opts.max_panels = 60;
  for (double width : {1e-1, 1e-3, 1e-6}) {
    auto spike = [&](double t) { return std::exp(-std::pow((t - 0.7) / width, 2)) / width; };
    const auto r = integrate_nu(k.nu, spike, opts);
    if (r.converged) {
      EXPECT_LE(r.error_estimate, std::max(opts.abs_tol, opts.rel_tol * std::abs(r.value)) * 4.0) << width;
    }
  }
}

TEST(MomentConditions, InverseMultiquadricThresholds) {
  EXPECT_TRUE(moment_condition_holds(make_imq_kernel(2, 1.0, 1.01).nu, 2));
  EXPECT_FALSE(moment_condition_holds(make_imq_kernel(2, 1.0, 1.0).nu, 2));
  EXPECT_TRUE(square_integrable(make_imq_kernel(2, 1.0, 0.51).nu, 2));
  EXPECT_FALSE(square_integrable(make_imq_kernel(2, 1.0, 0.5).nu, 2));
  EXPECT_TRUE(moment_condition_holds(make_matern_kernel(5, 1.0, 2.6).nu, 5));
}

TEST(PsiCross, AtZeroIsSquaredNorm) {
  const auto k = make_matern_kernel(2, 1.0, 2.5);
  EXPECT_NEAR(psi_l2_cross(k, 0.0), *kernel_constants(k).psi_l2_sq, 1e-12);
}

TEST(PsiCross, GaussianMatchesDirectConvolution) {
  const auto k = make_gaussian_kernel(1, 1.0);
  EXPECT_NEAR(psi_l2_cross(k, 1.0), std::sqrt(M_PI) * std::exp(-0.25), 1e-12);
  const double conv = line_integral([&](double y) { return eval_psi(k, y * y) * eval_psi(k, (y + 1) * (y + 1)); }, 20.0,
                                    40000);
  EXPECT_NEAR(psi_l2_cross(k, 1.0), conv, 1e-10);
}

TEST(PsiCross, DecaysToZeroAndGapIsConsistent) {
  const auto k = make_imq_kernel(1, 1.0, 1.0);
  EXPECT_LT(psi_l2_cross(k, 1e8), 1e-3);
  for (double z2 : {0.1, 2.0, 50.0}) {
    EXPECT_NEAR(psi_l2_cross_gap(k, z2), psi_l2_cross(k, 0.0) - psi_l2_cross(k, z2), 1e-9);
  }
}

TEST(PsiCross, RequiresSquareIntegrability) {
  EXPECT_THROW(psi_l2_cross(make_imq_kernel(4, 1.0, 0.5), 0.0), PreconditionError);
}

TEST(PsiCross, ClosedFormConvolutions) {
  // 1/(1 + x^2) is pi times the Cauchy(1) density; Cauchy(1) * Cauchy(1) = Cauchy(2).
  const auto imq = make_imq_kernel(1, 1.0, 1.0);
  // e^{-|x|} * e^{-|x|} = (1 + |z|) e^{-|z|}.
  const auto expo = make_matern_kernel(1, 1.0, 1.0);
  for (double z : {0.0, 0.3, 1.0, 4.0, 12.0}) {
    EXPECT_NEAR(psi_l2_cross(imq, z * z), 2 * M_PI / (4 + z * z), 1e-11) << z;
    EXPECT_NEAR(psi_l2_cross(expo, z * z), (1 + z) * std::exp(-z), 1e-11) << z;
  }
}

TEST(PsiCross, OneDimensionalReductionsMatchDoubleIntegral) {
  std::vector<RadialKernel> ks;
  for (int d : {1, 2, 3}) {
    for (double g : {0.7, 1.6, 2.0, 3.5}) {
      if (g >= 0.25 * d + 0.5) {
        ks.push_back(make_imq_kernel(d, 0.5, g));
        ks.push_back(make_imq_kernel(d, 2.0, g));
      }
    }
    for (double off : {0.3, 1.5}) {
      ks.push_back(make_matern_kernel(d, 0.7, 0.5 * d + off));
      ks.push_back(make_matern_kernel(d, 2.0, 0.5 * d + off));
    }
    NuMeasure nu;
    nu.invgamma = {{1.2, 0.5, 0.3}};
    ks.push_back(make_custom_kernel(d, nu));
    nu.invgamma.clear();
    nu.gamma = {{0.6 * d, 1.7, 2.5}};
    ks.push_back(make_custom_kernel(d, nu));
  }
  for (const auto& k : ks) {
    const double at0 = psi_l2_cross_pair(k, 0.0);
    for (double r2 : {0.0, 0.05, 1.0, 7.0, 60.0}) {
      const double pair = psi_l2_cross_pair(k, r2);
      EXPECT_NEAR(psi_l2_cross(k, r2), pair, 1e-8 * (1 + pair)) << k.d << ' ' << r2;
      EXPECT_NEAR(psi_l2_cross_gap(k, r2), at0 - pair, 1e-8 * (1 + at0)) << k.d << ' ' << r2;
    }
  }
}

TEST(PsiCross, NearCriticalImqMatchesClosedFormNorm) {
  // Close to gamma = d/4 the double-integral route no longer converges; the norm has a closed form.
  for (int d : {1, 2, 3}) {
    for (double g : {0.25 * d + 0.02, 0.25 * d + 0.1}) {
      const auto k = make_imq_kernel(d, 0.8, g);
      const double norm2 = *kernel_constants(k).psi_l2_sq;
      EXPECT_NEAR(psi_l2_cross(k, 0.0), norm2, 1e-9 * norm2) << d << ' ' << g;
      EXPECT_NEAR(psi_l2_cross_gap(k, 3.0), norm2 - psi_l2_cross(k, 3.0), 1e-9 * norm2) << d << ' ' << g;
    }
  }
}
