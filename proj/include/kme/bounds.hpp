#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kme/embedding.hpp"
#include "kme/kernel.hpp"

namespace kme {

struct Precondition {
  std::string name;
  bool satisfied = false;
  std::string detail;
};

// A minimax statement inf_est sup_P P^n{error >= s} >= probability_floor.
// `s` is absent when a gating precondition fails and no value is defined.
struct BoundReport {
  std::string theorem;  // thm1 | cor2 | thm6 | thm8 | thm9 | cor10 | thm12 | thm13 | thmE1
  std::optional<double> s;
  double probability_floor = 0.0;
  std::vector<Precondition> preconditions;
  std::string kernel_label;
  int d = 0;
  long n = 0;
  std::vector<std::pair<std::string, double>> constants;
  // Reduced-sample-size variant for the strong-convexity bounds when n < 1/eps.
  std::optional<double> fallback_s;
  std::optional<double> fallback_floor;

  bool all_preconditions_hold() const;
  // Value of a recorded constant; throws ArgumentError when missing.
  double constant(const std::string& name) const;
};

struct AlphaChoice {
  double t1 = 0.0;
  double alpha = 0.0;
};

// t1 and alpha with nu([t1, inf)) >= alpha, so psi(0) - psi(z) >= alpha / 2
// whenever |z|^2 = 1 / t1.
AlphaChoice alpha_for(const RadialKernel& k);

struct ZBeta {
  double z_norm2 = 0.0;
  double beta = 0.0;
};

ZBeta find_z_beta(const RadialKernel& k);
// Translation-invariant psi given through r2 -> psi(0) - psi(r2); maximizes the
// gap over |z| by a log-grid scan refined with golden-section search.
ZBeta find_z_beta(const std::function<double(double)>& psi_gap, double r_min = 1e-3, double r_max = 1e3);

// Interval [lo, hi] with nu([lo, hi]) >= beta and the derived constant.
struct IntervalConstant {
  double lo = 0.0;
  double hi = 0.0;
  double beta = 0.0;
  double value = 0.0;
  // Closed form as tabulated for the family, when one exists. For Matern the
  // tabulated A_k and B_k_l2 are 2^d smaller than `value`.
  std::optional<double> printed;
  std::string branch;
};

IntervalConstant bk_for(const RadialKernel& k);     // beta t0 / t1
IntervalConstant ak_for(const RadialKernel& k);     // beta^2 delta1^{-d/2}
IntervalConstant bk_l2_for(const RadialKernel& k);  // beta^2 delta0 delta1^{-(d+2)/2}

std::string kernel_label(const RadialKernel& k);

BoundReport bound_thm1(double beta, long n);
BoundReport bound_cor2(double alpha, long n);
BoundReport bound_thm8(const RadialKernel& k, long n);
BoundReport bound_thmE1(const RadialKernel& k, long n);
BoundReport bound_thm9(const RadialKernel& k, double z_norm2, long n);
BoundReport bound_cor10(const RadialKernel& k, long n);
BoundReport bound_thm13(const RadialKernel& k, long n);
BoundReport bound_thm6(double c_psi, double eps_psi, long n);
BoundReport bound_thm12(double c_psi, double eps_psi, long n);

// Hard-family parameters shared with the Le Cam construction.
struct HardFamilyConstants {
  Norm norm = Norm::rkhs;
  int N = 5;
  double sigma2 = 0.0;
  double c_nu = 0.0;
  // Guaranteed lower bound factor: dist^2 >= distance_factor * |mu0 - mu1|^2.
  double distance_factor = 0.0;
  // Separation radius implied by the packing, never below the theorem's s.
  double construction_s = 0.0;
  double theorem_s = 0.0;
};

HardFamilyConstants hard_family_constants(const RadialKernel& k, long n, Norm norm);

// The strong-convexity objective F(a, e): twice the second directional
// derivative along e of the embedding distance at displacement a.
double strong_convexity_objective(const RadialKernel& k, double sigma2, Norm norm, const Eigen::VectorXd& a,
                                  const Eigen::VectorXd& e);

struct StrongConvexityEstimate {
  double c_psi = 0.0;
  double eps_psi = 0.0;
  double sigma2 = 0.0;
  int d = 0;
  Norm norm = Norm::rkhs;
  double F0 = 0.0;
  double quadrature_error = 0.0;
};

// Largest eps on a doubling/bisection schedule with min F >= F(0)/2 over
// |a|^2 <= eps and a direction grid; c_psi is the minimum found there. d <= 4.
StrongConvexityEstimate estimate_cpsi_eps(const RadialKernel& k, double sigma2, Norm norm);

// Unit directions used by estimate_cpsi_eps; always contains e1.
std::vector<Eigen::VectorXd> sphere_grid(int d);

}  // namespace kme
