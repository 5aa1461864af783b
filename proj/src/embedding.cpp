#include "kme/embedding.hpp"

#include <cmath>
#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "kme/errors.hpp"

namespace kme {

const char* norm_name(Norm norm) { return norm == Norm::rkhs ? "rkhs" : "l2"; }

Norm norm_from_name(const std::string& name) {
  if (name == "rkhs") return Norm::rkhs;
  if (name == "l2") return Norm::l2;
  throw ArgumentError("unknown norm '" + name + "' (expected rkhs or l2)");
}

WeightedPointMeasure uniform_measure(Eigen::MatrixXd points) {
  WeightedPointMeasure m;
  const auto n = points.rows();
  if (n < 1) throw ArgumentError("uniform_measure: needs at least one point");
  m.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  m.points = std::move(points);
  return m;
}

WeightedPointMeasure as_weighted(const TwoPointDiscrete& p) {
  if (p.x.size() != p.v.size()) throw ArgumentError("two-point measure: x and v differ in dimension");
  WeightedPointMeasure m;
  m.points.resize(2, p.x.size());
  m.points.row(0) = p.x.transpose();
  m.points.row(1) = p.v.transpose();
  m.weights.resize(2);
  m.weights << p.p, 1.0 - p.p;
  return m;
}

namespace {

void check_gaussian(const RadialKernel& k, const IsotropicGaussian& g) {
  if (g.mu.size() != k.d) throw ArgumentError("gaussian mean dimension does not match kernel d");
  if (!(g.sigma2 > 0.0) || !std::isfinite(g.sigma2)) throw ArgumentError("gaussian variance must be > 0");
}

void check_pair(const RadialKernel& k, const IsotropicGaussian& g0, const IsotropicGaussian& g1) {
  check_gaussian(k, g0);
  check_gaussian(k, g1);
  if (std::abs(g0.sigma2 - g1.sigma2) > 1e-12 * std::max(g0.sigma2, g1.sigma2)) {
    throw UnsupportedCaseError("gaussian embedding forms require equal variances");
  }
}

void check_two_point(const RadialKernel& k, const TwoPointDiscrete& p) {
  if (p.x.size() != k.d || p.v.size() != k.d) throw ArgumentError("two-point atoms must have dimension d");
  if (!(p.p > 0.0 && p.p < 1.0)) throw ArgumentError("two-point weight p must lie in (0, 1)");
  if (p.x == p.v) throw ArgumentError("two-point atoms must be distinct");
}

void check_shared_atoms(const RadialKernel& k, const TwoPointDiscrete& p0, const TwoPointDiscrete& p1) {
  check_two_point(k, p0);
  check_two_point(k, p1);
  if (p0.x != p1.x || p0.v != p1.v) {
    throw UnsupportedCaseError("two-point distance requires shared atoms; use the weighted form");
  }
}

void check_measure(const RadialKernel& k, const WeightedPointMeasure& m) {
  if (m.points.cols() != k.d) throw ArgumentError("point measure dimension does not match kernel d");
  if (m.weights.size() != m.points.rows()) throw ArgumentError("point measure: weights and points differ in length");
}

WeightedPointMeasure signed_difference(const WeightedPointMeasure& a, const WeightedPointMeasure& b) {
  WeightedPointMeasure c;
  c.points.resize(a.size() + b.size(), a.dim());
  c.points.topRows(a.size()) = a.points;
  c.points.bottomRows(b.size()) = b.points;
  c.weights.resize(a.size() + b.size());
  c.weights.head(a.size()) = a.weights;
  c.weights.tail(b.size()) = -b.weights;
  return c;
}

double checked_profile_integral(const RadialKernel& k, Norm norm, const std::function<double(double)>& g,
                                const char* operation) {
  return checked_value(integrate_profile_measure(k, norm, g), operation);
}

double gauss_inner_impl(const RadialKernel& k, Norm norm, const IsotropicGaussian& g0,
                        const IsotropicGaussian& g1, const char* op) {
  check_pair(k, g0, g1);
  const double delta = (g0.mu - g1.mu).squaredNorm();
  const double s2 = g0.sigma2;
  const double half_d = 0.5 * k.d;
  auto f = [=](double s) {
    const double den = 1.0 + 4.0 * s * s2;
    return std::exp(-half_d * std::log(den) - s * delta / den);
  };
  return checked_profile_integral(k, norm, f, op);
}

double gauss_dist2_impl(const RadialKernel& k, Norm norm, const IsotropicGaussian& g0,
                        const IsotropicGaussian& g1, const char* op) {
  check_pair(k, g0, g1);
  const double delta = (g0.mu - g1.mu).squaredNorm();
  if (delta == 0.0) return 0.0;
  const double s2 = g0.sigma2;
  const double half_d = 0.5 * k.d;
  auto f = [=](double s) {
    const double den = 1.0 + 4.0 * s * s2;
    return -2.0 * std::exp(-half_d * std::log(den)) * std::expm1(-s * delta / den);
  };
  return clamp_rounding(checked_profile_integral(k, norm, f, op), op);
}

double point_gauss_inner_impl(const RadialKernel& k, Norm norm, const Eigen::VectorXd& x,
                              const IsotropicGaussian& g, const char* op) {
  check_gaussian(k, g);
  if (x.size() != k.d) throw ArgumentError("point dimension does not match kernel d");
  const double r2 = (x - g.mu).squaredNorm();
  const double s2 = g.sigma2;
  const double half_d = 0.5 * k.d;
  auto f = [=](double s) {
    const double den = 1.0 + 2.0 * s * s2;
    return std::exp(-half_d * std::log(den) - s * r2 / den);
  };
  return checked_profile_integral(k, norm, f, op);
}

double discrete_dist2_impl(const RadialKernel& k, Norm norm, const TwoPointDiscrete& p0,
                           const TwoPointDiscrete& p1, const char* op) {
  check_shared_atoms(k, p0, p1);
  const double dp = p0.p - p1.p;
  if (dp == 0.0) return 0.0;
  const double r2 = (p0.x - p0.v).squaredNorm();
  const double gap = norm == Norm::rkhs ? eval_psi_gap(k, r2) : psi_l2_cross_gap(k, r2);
  return clamp_rounding(2.0 * dp * dp * gap, op);
}

// Closed form of sum_i w_i <k(., x_i), theta_g> for an exponential-sum profile.
double point_gauss_sum(const ExpSum& profile, int d, const WeightedPointMeasure& m, const IsotropicGaussian& g) {
  const double half_d = 0.5 * d;
  std::vector<double> scale(profile.rates.size());
  std::vector<double> factor(profile.rates.size());
  for (std::size_t a = 0; a < profile.rates.size(); ++a) {
    const double den = 1.0 + 2.0 * profile.rates[a] * g.sigma2;
    scale[a] = profile.rates[a] / den;
    factor[a] = profile.weights[a] * std::exp(-half_d * std::log(den));
  }
  double total = 0.0;
  for (int i = 0; i < m.size(); ++i) {
    const double r2 = (m.points.row(i).transpose() - g.mu).squaredNorm();
    double v = 0.0;
    for (std::size_t a = 0; a < scale.size(); ++a) v += factor[a] * std::exp(-scale[a] * r2);
    total += m.weights(i) * v;
  }
  return total;
}

double empirical_vs_gauss_impl(const RadialKernel& k, Norm norm, const WeightedPointMeasure& sample,
                               const IsotropicGaussian& g, const char* op) {
  check_measure(k, sample);
  check_gaussian(k, g);
  const double self = gauss_inner(k, norm, g, g);
  const auto profile = profile_exp_sum(k, norm);
  double gram = 0.0;
  double cross = 0.0;
  if (profile) {
    gram = self_quadratic_forms(sample, {*profile})[0];
    cross = point_gauss_sum(*profile, k.d, sample, g);
  } else {
    gram = self_quadratic_form(k, norm, sample);
    for (int i = 0; i < sample.size(); ++i) {
      cross += sample.weights(i) * point_gauss_inner(k, norm, sample.points.row(i).transpose(), g);
    }
  }
  return clamp_rounding(gram - 2.0 * cross + self, op);
}

}  // namespace

QuadratureResult integrate_profile_measure(const RadialKernel& k, Norm norm,
                                           const std::function<double(double)>& g,
                                           const QuadratureOptions& opts) {
  if (norm == Norm::rkhs) return integrate_nu(k.nu, g, opts);
  if (!square_integrable(k.nu, k.d)) {
    throw PreconditionError("L2 embedding forms: psi is not square integrable for this kernel");
  }
  if (const auto rho = l2_profile_measure(k)) return integrate_nu(*rho, g, opts);
  const double half_d = 0.5 * k.d;
  auto pair = [&](double t1, double t2) {
    // 1 / (1/t1 + 1/t2) avoids overflow of t1 * t2 deep in the tails.
    return std::exp(half_d * std::log(M_PI / (t1 + t2))) * g(1.0 / (1.0 / t1 + 1.0 / t2));
  };
  return integrate_nu_pair(k.nu, pair, opts);
}

double ExpSum::operator()(double r2) const {
  double v = 0.0;
  for (std::size_t a = 0; a < rates.size(); ++a) v += weights[a] * std::exp(-rates[a] * r2);
  return v;
}

std::optional<ExpSum> profile_exp_sum(const RadialKernel& k, Norm norm) {
  if (!k.nu.atoms_only()) return std::nullopt;
  std::map<double, double> merged;
  if (norm == Norm::rkhs) {
    for (const auto& a : k.nu.atoms) merged[a.t] += a.mass;
  } else {
    if (!square_integrable(k.nu, k.d)) {
      throw PreconditionError("L2 embedding forms: psi is not square integrable for this kernel");
    }
    const double half_d = 0.5 * k.d;
    for (const auto& a : k.nu.atoms) {
      for (const auto& b : k.nu.atoms) {
        const double s = a.t + b.t;
        merged[a.t * b.t / s] += a.mass * b.mass * std::exp(half_d * std::log(M_PI / s));
      }
    }
  }
  ExpSum out;
  for (const auto& [rate, weight] : merged) {
    out.rates.push_back(rate);
    out.weights.push_back(weight);
  }
  return out;
}

double inner_profile(const RadialKernel& k, Norm norm, double r2) {
  return norm == Norm::rkhs ? eval_psi(k, r2) : psi_l2_cross(k, r2);
}

double self_quadratic_form(const RadialKernel& k, Norm norm, const WeightedPointMeasure& m) {
  check_measure(k, m);
  if (const auto profile = profile_exp_sum(k, norm)) return self_quadratic_forms(m, {*profile})[0];
  // Each profile value costs a quadrature here, so repeated points are merged
  // and values are shared between pairs at the same squared distance. Both
  // steps are exact; discrete samples then need a handful of evaluations.
  std::vector<int> order(static_cast<std::size_t>(m.size()));
  std::iota(order.begin(), order.end(), 0);
  auto row_less = [&](int a, int b) {
    for (Eigen::Index c = 0; c < m.points.cols(); ++c) {
      if (m.points(a, c) != m.points(b, c)) return m.points(a, c) < m.points(b, c);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), row_less);
  std::vector<int> reps;
  std::vector<double> w;
  for (int i : order) {
    if (!reps.empty() && !row_less(reps.back(), i)) {
      w.back() += m.weights(i);
    } else {
      reps.push_back(i);
      w.push_back(m.weights(i));
    }
  }
  std::unordered_map<double, double> memo;
  auto profile = [&](double r2) {
    auto it = memo.find(r2);
    if (it == memo.end()) it = memo.emplace(r2, inner_profile(k, norm, r2)).first;
    return it->second;
  };
  double total = 0.0;
  for (double wi : w) total += wi * wi;
  total *= profile(0.0);
  for (std::size_t i = 0; i < reps.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = i + 1; j < reps.size(); ++j) {
      row += w[j] * profile((m.points.row(reps[i]) - m.points.row(reps[j])).squaredNorm());
    }
    total += 2.0 * w[i] * row;
  }
  return total;
}

double clamp_rounding(double value, const char* operation) {
  if (value >= 0.0) return value;
  if (value >= -1e-10) return 0.0;
  throw ConsistencyError(std::string(operation) + ": squared distance " + std::to_string(value) +
                         " is negative beyond rounding");
}

double rkhs_gauss_inner(const RadialKernel& k, const IsotropicGaussian& g0, const IsotropicGaussian& g1) {
  return gauss_inner_impl(k, Norm::rkhs, g0, g1, "rkhs_gauss_inner");
}

double rkhs_gauss_dist2(const RadialKernel& k, const IsotropicGaussian& g0, const IsotropicGaussian& g1) {
  return gauss_dist2_impl(k, Norm::rkhs, g0, g1, "rkhs_gauss_dist2");
}

double rkhs_point_gauss_inner(const RadialKernel& k, const Eigen::VectorXd& x, const IsotropicGaussian& g) {
  return point_gauss_inner_impl(k, Norm::rkhs, x, g, "rkhs_point_gauss_inner");
}

double rkhs_discrete_dist2(const RadialKernel& k, const TwoPointDiscrete& p0, const TwoPointDiscrete& p1) {
  return discrete_dist2_impl(k, Norm::rkhs, p0, p1, "rkhs_discrete_dist2");
}

double mmd_weighted(const RadialKernel& k, const WeightedPointMeasure& a, const WeightedPointMeasure& b) {
  return weighted_dist2(k, Norm::rkhs, a, b);
}

double mmd_empirical_vs_gauss(const RadialKernel& k, const WeightedPointMeasure& sample,
                              const IsotropicGaussian& g) {
  return empirical_vs_gauss_impl(k, Norm::rkhs, sample, g, "mmd_empirical_vs_gauss");
}

double l2_gauss_inner(const RadialKernel& k, const IsotropicGaussian& g0, const IsotropicGaussian& g1) {
  return gauss_inner_impl(k, Norm::l2, g0, g1, "l2_gauss_inner");
}

double l2_gauss_dist2(const RadialKernel& k, const IsotropicGaussian& g0, const IsotropicGaussian& g1) {
  return gauss_dist2_impl(k, Norm::l2, g0, g1, "l2_gauss_dist2");
}

double l2_point_gauss_inner(const RadialKernel& k, const Eigen::VectorXd& x, const IsotropicGaussian& g) {
  return point_gauss_inner_impl(k, Norm::l2, x, g, "l2_point_gauss_inner");
}

double l2_discrete_dist2(const RadialKernel& k, const TwoPointDiscrete& p0, const TwoPointDiscrete& p1) {
  return discrete_dist2_impl(k, Norm::l2, p0, p1, "l2_discrete_dist2");
}

double l2_weighted_dist2(const RadialKernel& k, const WeightedPointMeasure& a, const WeightedPointMeasure& b) {
  return weighted_dist2(k, Norm::l2, a, b);
}

double l2_empirical_vs_gauss(const RadialKernel& k, const WeightedPointMeasure& sample,
                             const IsotropicGaussian& g) {
  return empirical_vs_gauss_impl(k, Norm::l2, sample, g, "l2_empirical_vs_gauss");
}

double gauss_inner(const RadialKernel& k, Norm norm, const IsotropicGaussian& g0, const IsotropicGaussian& g1) {
  return gauss_inner_impl(k, norm, g0, g1, norm == Norm::rkhs ? "rkhs_gauss_inner" : "l2_gauss_inner");
}

double gauss_dist2(const RadialKernel& k, Norm norm, const IsotropicGaussian& g0, const IsotropicGaussian& g1) {
  return gauss_dist2_impl(k, norm, g0, g1, norm == Norm::rkhs ? "rkhs_gauss_dist2" : "l2_gauss_dist2");
}

double point_gauss_inner(const RadialKernel& k, Norm norm, const Eigen::VectorXd& x, const IsotropicGaussian& g) {
  return point_gauss_inner_impl(k, norm, x, g,
                                norm == Norm::rkhs ? "rkhs_point_gauss_inner" : "l2_point_gauss_inner");
}

double weighted_dist2(const RadialKernel& k, Norm norm, const WeightedPointMeasure& a,
                      const WeightedPointMeasure& b) {
  check_measure(k, a);
  check_measure(k, b);
  const char* op = norm == Norm::rkhs ? "mmd_weighted" : "l2_weighted_dist2";
  return clamp_rounding(self_quadratic_form(k, norm, signed_difference(a, b)), op);
}

double empirical_vs_gauss(const RadialKernel& k, Norm norm, const WeightedPointMeasure& sample,
                          const IsotropicGaussian& g) {
  return empirical_vs_gauss_impl(k, norm, sample, g,
                                 norm == Norm::rkhs ? "mmd_empirical_vs_gauss" : "l2_empirical_vs_gauss");
}

std::vector<double> empirical_vs_gauss_norms(const RadialKernel& k, const std::vector<Norm>& norms,
                                             const WeightedPointMeasure& sample, const IsotropicGaussian& g) {
  std::vector<ExpSum> profiles;
  for (Norm norm : norms) {
    auto p = profile_exp_sum(k, norm);
    if (!p) break;
    profiles.push_back(std::move(*p));
  }
  std::vector<double> out;
  if (profiles.size() != norms.size()) {
    for (Norm norm : norms) out.push_back(empirical_vs_gauss(k, norm, sample, g));
    return out;
  }
  check_measure(k, sample);
  check_gaussian(k, g);
  const std::vector<double> grams = self_quadratic_forms(sample, profiles);
  for (std::size_t i = 0; i < norms.size(); ++i) {
    const double cross = point_gauss_sum(profiles[i], k.d, sample, g);
    const double self = gauss_inner(k, norms[i], g, g);
    out.push_back(clamp_rounding(grams[i] - 2.0 * cross + self,
                                 norms[i] == Norm::rkhs ? "mmd_empirical_vs_gauss" : "l2_empirical_vs_gauss"));
  }
  return out;
}

double weak_norm_constant(const RadialKernel& k) {
  return std::pow(2.0 * M_PI, 0.5 * k.d) * spectral_density(k, 0.0);
}

}  // namespace kme
