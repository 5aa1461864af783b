#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <random>

#include "kme/embedding.hpp"

namespace kme {

// Independent numerical routes to the embedding distances. They use only
// eval_psi / spectral_density and generic quadrature, never the closed forms.

struct OracleOptions {
  double abs_tol = 1e-11;
  double rel_tol = 1e-10;
  int max_panels = 20000;
};

// (2 pi)^{-d/2} int e^{-sigma2 |w|^2} 2 (1 - cos<dmu, w>) lambda(w) dw, reduced to
// (|w|, angle to dmu) coordinates. Requires d <= 5.
QuadratureResult bochner_rkhs_oracle(const RadialKernel& k, const IsotropicGaussian& g0,
                                     const IsotropicGaussian& g1, const OracleOptions& opts = {});

// int e^{-sigma2 |w|^2} 2 (1 - cos<dmu, w>) lambda(w)^2 dw, same reduction.
QuadratureResult l2_dist_oracle(const RadialKernel& k, const IsotropicGaussian& g0,
                                const IsotropicGaussian& g1, const OracleOptions& opts = {});

// ||psi(x - .) - psi(v - .)||_{L2}^2 in d = 1 by direct quadrature over the line.
QuadratureResult l2_point_difference_oracle_1d(const RadialKernel& k, double x, double v,
                                               const OracleOptions& opts = {});

// E f(X), X ~ g, by a tensor Gauss-Hermite rule with `order` nodes per axis; d <= 3.
double gauss_hermite_expect(const std::function<double(const Eigen::VectorXd&)>& f,
                            const IsotropicGaussian& g, int order);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long samples = 0;
};

using Sampler = std::function<double(std::mt19937_64&)>;

// Mean of n_samples draws of `draw`, split into fixed blocks each with its own
// keyed stream so the result is independent of scheduling.
McEstimate mc_expect(const Sampler& draw, long n_samples, std::uint64_t seed);

struct McGate {
  bool passed = false;
  bool retried = false;
  double z = 0.0;
  McEstimate estimate;
};

// Accept |mean - reference| <= 3 standard errors. A first result in (3, 4]
// sigma is retried once with 4x samples on a fresh stream.
McGate mc_gate(double reference, const Sampler& draw, long n_samples, std::uint64_t seed);

}  // namespace kme
