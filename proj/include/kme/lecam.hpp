#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kme/bounds.hpp"
#include "kme/estimator.hpp"

namespace kme {

// Two-hypothesis floor max(e^{-alpha}/4, (1 - sqrt(alpha/2))/2).
double lecam_two(double alpha);
// Multi-hypothesis floor sqrt(M)/(1+sqrt(M)) (1 - 2 alpha - sqrt(2 alpha / log M));
// needs M >= 2 and 0 < alpha <= 1/8.
double lecam_many(long M, double alpha);

// KL(G(mu0, s2 I)^n || G(mu1, s2 I)^n).
double kl_gauss_iso(const Eigen::VectorXd& mu0, const Eigen::VectorXd& mu1, double sigma2, long n);

struct TwoPointKL {
  double bound = 0.0;  // n (p0 - p1)^2 / (p1 (1 - p1))
  double exact = 0.0;  // n KL(Bernoulli(p0) || Bernoulli(p1))
};
TwoPointKL kl_two_point_bound(double p0, double p1, long n);

// At least N^d points (rows) in the closed ball of the given radius, pairwise
// at least radius / N apart. Both properties are re-checked before returning.
// Refuses N^d above 20000 since the certificate is a quadratic scan.
Eigen::MatrixXd pack_ball(int d, double radius, int N);
// The `cap` points of smallest norm from the same construction (ties broken
// lexicographically), without enumerating the whole packing when it is large.
Eigen::MatrixXd pack_ball_capped(int d, double radius, int N, int cap);

struct PackingCheck {
  double min_distance = 0.0;
  double max_norm = 0.0;
};
PackingCheck scan_packing(const Eigen::MatrixXd& points);

struct HardFamily {
  std::string theorem;  // thm8 | thm13 | thm1
  Norm norm = Norm::rkhs;
  RadialKernel kernel;
  long n = 0;
  std::vector<Target> hypotheses;  // hypotheses[0] is the reference theta_0
  double s = 0.0;                  // the theorem's separation radius
  double construction_s = 0.0;     // radius implied by the packing; >= s
  double alpha = 0.0;              // KL budget factor
  long M = 0;                      // hypothesis count minus one
  double sigma2 = 0.0;
  double c_nu = 0.0;
  int N = 0;
  double packing_radius = 0.0;
  Eigen::MatrixXd points;
  // Interval endpoint entering the closeness condition (t1 or delta1).
  double t_upper = 0.0;
  double probability_floor = 0.0;
};

constexpr int kHypothesisCap = 125;

// Gaussian hypotheses on a packing of the ball of radius sqrt(c_nu / n). The
// L2 norm selects the delta-interval constants. At most `cap` hypotheses.
HardFamily build_hard_family_thm8(const RadialKernel& k, long n, Norm norm, int cap = kHypothesisCap);
// Two-point family: p0 = 1/2 + 1/(3 sqrt n), p1 = 1/2 on {0, z} with z from find_z_beta.
HardFamily build_two_point_family(const RadialKernel& k, long n, Norm norm = Norm::rkhs);

struct ConditionReport {
  double min_pairwise_distance = 0.0;
  double required_separation = 0.0;
  double construction_separation = 0.0;
  double mean_kl = 0.0;  // (1/M) sum_j KL(P_j^n || P_0^n), or the single KL for two points
  double max_pairwise_kl = 0.0;
  double kl_budget = 0.0;
  double max_closeness = 0.0;  // largest left side of the closeness condition
  double closeness_limit = 0.0;
  std::optional<double> max_e1_margin;  // largest left side minus right side; <= 0 passes
  double floor_value = 0.0;
  bool separation_ok = false;
  bool construction_separation_ok = false;
  bool kl_ok = false;
  bool closeness_ok = false;
  std::optional<bool> e1_ok;
  bool all_pass() const;
};

ConditionReport verify_hard_family(const HardFamily& family, bool check_e1 = false, int jobs = 0);

struct StressSummary {
  std::string estimator;
  int replicates = 0;
  double s = 0.0;
  double probability_floor = 0.0;
  std::vector<double> exceedance;  // per hypothesis
  double worst_case = 0.0;
  int worst_hypothesis = 0;
};

// Frequency of {error >= s} per hypothesis for the "empirical" or "zero" estimator.
StressSummary minimax_stress(const std::string& estimator, const HardFamily& family, int replicates,
                             std::uint64_t seed, int jobs = 0);

}  // namespace kme
