#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

#include "kme/kernel.hpp"

namespace kme {

enum class Norm { rkhs, l2 };

const char* norm_name(Norm norm);
Norm norm_from_name(const std::string& name);

struct IsotropicGaussian {
  Eigen::VectorXd mu;
  double sigma2 = 1.0;
};

struct TwoPointDiscrete {
  Eigen::VectorXd x;
  Eigen::VectorXd v;
  double p = 0.5;
};

// One point per row of `points`; weights may be signed but must sum to 1 for
// probability measures.
struct WeightedPointMeasure {
  Eigen::MatrixXd points;
  Eigen::VectorXd weights;

  int size() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }
};

WeightedPointMeasure uniform_measure(Eigen::MatrixXd points);
WeightedPointMeasure as_weighted(const TwoPointDiscrete& p);

// Measure rho on s > 0 such that <k(., x), k(., y)> = int e^{-s |x-y|^2} drho(s)
// in the chosen norm. For the RKHS rho = nu; for L2 rho is the image of
// (pi / (t1 + t2))^{d/2} dnu(t1) dnu(t2) under (t1, t2) -> t1 t2 / (t1 + t2).
QuadratureResult integrate_profile_measure(const RadialKernel& k, Norm norm,
                                           const std::function<double(double)>& g,
                                           const QuadratureOptions& opts = {});

// Finite exponential sum r2 -> sum_a weights[a] * exp(-rates[a] * r2).
struct ExpSum {
  std::vector<double> rates;
  std::vector<double> weights;
  double operator()(double r2) const;
};

// The profile measure as an exponential sum; present only for atom-only nu.
std::optional<ExpSum> profile_exp_sum(const RadialKernel& k, Norm norm);

// <k(., x), k(., y)> as a function of |x - y|^2.
double inner_profile(const RadialKernel& k, Norm norm, double r2);

// For each profile, sum_{i,j} w_i w_j profile(|x_i - x_j|^2). All profiles share
// one pass over the point pairs.
std::vector<double> self_quadratic_forms(const WeightedPointMeasure& m, const std::vector<ExpSum>& profiles);

// sum_{i,j} w_i w_j <k(., x_i), k(., x_j)> for any kernel.
double self_quadratic_form(const RadialKernel& k, Norm norm, const WeightedPointMeasure& m);

// Values within 1e-10 below zero are rounding and clamp to 0; anything lower
// throws ConsistencyError.
double clamp_rounding(double value, const char* operation);

// RKHS forms between embeddings of isotropic Gaussians with equal variance.
double rkhs_gauss_inner(const RadialKernel& k, const IsotropicGaussian& g0, const IsotropicGaussian& g1);
double rkhs_gauss_dist2(const RadialKernel& k, const IsotropicGaussian& g0, const IsotropicGaussian& g1);
double rkhs_point_gauss_inner(const RadialKernel& k, const Eigen::VectorXd& x, const IsotropicGaussian& g);
double rkhs_discrete_dist2(const RadialKernel& k, const TwoPointDiscrete& p0, const TwoPointDiscrete& p1);
double mmd_weighted(const RadialKernel& k, const WeightedPointMeasure& a, const WeightedPointMeasure& b);
double mmd_empirical_vs_gauss(const RadialKernel& k, const WeightedPointMeasure& sample,
                              const IsotropicGaussian& g);

// L2(R^d) counterparts.
double l2_gauss_inner(const RadialKernel& k, const IsotropicGaussian& g0, const IsotropicGaussian& g1);
double l2_gauss_dist2(const RadialKernel& k, const IsotropicGaussian& g0, const IsotropicGaussian& g1);
double l2_point_gauss_inner(const RadialKernel& k, const Eigen::VectorXd& x, const IsotropicGaussian& g);
double l2_discrete_dist2(const RadialKernel& k, const TwoPointDiscrete& p0, const TwoPointDiscrete& p1);
double l2_weighted_dist2(const RadialKernel& k, const WeightedPointMeasure& a, const WeightedPointMeasure& b);
double l2_empirical_vs_gauss(const RadialKernel& k, const WeightedPointMeasure& sample,
                             const IsotropicGaussian& g);

// Norm-generic dispatch used by the estimator and hard-family code.
double gauss_inner(const RadialKernel& k, Norm norm, const IsotropicGaussian& g0, const IsotropicGaussian& g1);
double gauss_dist2(const RadialKernel& k, Norm norm, const IsotropicGaussian& g0, const IsotropicGaussian& g1);
double point_gauss_inner(const RadialKernel& k, Norm norm, const Eigen::VectorXd& x, const IsotropicGaussian& g);
double weighted_dist2(const RadialKernel& k, Norm norm, const WeightedPointMeasure& a,
                      const WeightedPointMeasure& b);
double empirical_vs_gauss(const RadialKernel& k, Norm norm, const WeightedPointMeasure& sample,
                          const IsotropicGaussian& g);

// empirical_vs_gauss for several norms at once; atom-only kernels share one
// pass over the sample pairs.
std::vector<double> empirical_vs_gauss_norms(const RadialKernel& k, const std::vector<Norm>& norms,
                                             const WeightedPointMeasure& sample, const IsotropicGaussian& g);

// |f|_{L2}^2 <= weak_norm_constant(k) * |f|_H^2 for f in the RKHS; equals
// (2 pi)^{d/2} times the supremum of the spectral density.
double weak_norm_constant(const RadialKernel& k);

}  // namespace kme
