#include "kme/kernel.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "kme/errors.hpp"

namespace kme {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

// Density of one component in u = log t, including the Jacobian e^u, in log form.
struct LogDensity {
  double log_norm;
  double shape;
  double rate;
  bool inverse;

  double operator()(double u) const {
    if (inverse) return log_norm - shape * u - rate * std::exp(-u);
    return log_norm + shape * u - rate * std::exp(u);
  }
  double mode() const { return inverse ? std::log(rate / shape) : std::log(shape / rate); }
  double width() const { return 1.0 / std::sqrt(shape); }
};

LogDensity log_density(const GammaComponent& g) {
  return {std::log(g.weight) + g.shape * std::log(g.rate) - std::lgamma(g.shape), g.shape, g.rate,
          false};
}

LogDensity log_density(const InvGammaComponent& g) {
  return {std::log(g.weight) + g.shape * std::log(g.scale) - std::lgamma(g.shape), g.shape,
          g.scale, true};
}

std::vector<LogDensity> densities(const NuMeasure& nu) {
  std::vector<LogDensity> out;
  for (const auto& g : nu.gamma) out.push_back(log_density(g));
  for (const auto& g : nu.invgamma) out.push_back(log_density(g));
  return out;
}

QuadratureResult integrate_component(const LogDensity& dens, const std::function<double(double)>& f,
                                     const QuadratureOptions& opts) {
  auto integrand = [&](double u) {
    const double ld = dens(u);
    if (ld < -745.0) return 0.0;
    const double t = std::exp(u);
    if (t == 0.0 || !std::isfinite(t)) return 0.0;
    return f(t) * std::exp(ld);
  };
  return integrate_real_line(integrand, dens.mode(), dens.width(), opts);
}

}  // namespace

double NuMeasure::total_mass() const {
  double z = 0.0;
  for (const auto& a : atoms) z += a.mass;
  for (const auto& g : gamma) z += g.weight;
  for (const auto& g : invgamma) z += g.weight;
  return z;
}

void NuMeasure::validate() const {
  bool has_positive_support = false;
  for (const auto& a : atoms) {
    if (!(std::isfinite(a.t) && a.t >= 0.0)) throw ArgumentError("nu: atom location must be finite and >= 0");
    if (!positive_finite(a.mass)) throw ArgumentError("nu: atom mass must be finite and > 0");
    if (a.t > 0.0) has_positive_support = true;
  }
  for (const auto& g : gamma) {
    if (!positive_finite(g.shape) || !positive_finite(g.rate) || !positive_finite(g.weight)) {
      throw ArgumentError("nu: Gamma component needs shape, rate and weight finite and > 0");
    }
    has_positive_support = true;
  }
  for (const auto& g : invgamma) {
    if (!positive_finite(g.shape) || !positive_finite(g.scale) || !positive_finite(g.weight)) {
      throw ArgumentError("nu: inverse-Gamma component needs shape, scale and weight finite and > 0");
    }
    has_positive_support = true;
  }
  if (!has_positive_support) throw ArgumentError("nu: support must not be contained in {0}");
  if (!positive_finite(total_mass())) throw ArgumentError("nu: total mass must be finite and > 0");
}

std::string family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::gaussian_mixture: return "gaussian_mixture";
    case KernelFamily::inverse_multiquadric: return "inverse_multiquadric";
    case KernelFamily::matern: return "matern";
    case KernelFamily::custom: return "custom";
  }
  return "custom";
}

KernelFamily family_from_name(const std::string& name) {
  if (name == "gaussian") return KernelFamily::gaussian;
  if (name == "gaussian_mixture" || name == "mixture") return KernelFamily::gaussian_mixture;
  if (name == "inverse_multiquadric" || name == "imq") return KernelFamily::inverse_multiquadric;
  if (name == "matern") return KernelFamily::matern;
  if (name == "custom") return KernelFamily::custom;
  throw ArgumentError("unknown kernel family '" + name + "'");
}

namespace {
void check_dimension(int d) {
  if (d < 1) throw ArgumentError("kernel dimension d must be >= 1");
}
}  // namespace

RadialKernel make_gaussian_kernel(int d, double eta) {
  check_dimension(d);
  if (!positive_finite(eta)) throw ArgumentError("gaussian kernel: eta must be > 0");
  RadialKernel k;
  k.family = KernelFamily::gaussian;
  k.d = d;
  k.nu.atoms.push_back({1.0 / (2.0 * eta * eta), 1.0});
  k.params.eta = eta;
  return k;
}

RadialKernel make_mixture_kernel(int d, std::vector<double> betas, std::vector<double> etas) {
  check_dimension(d);
  if (betas.empty() || betas.size() != etas.size()) {
    throw ArgumentError("mixture kernel: betas and etas must be non-empty and of equal length");
  }
  std::vector<std::size_t> order(etas.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return etas[a] > etas[b]; });
  RadialKernel k;
  k.family = KernelFamily::gaussian_mixture;
  k.d = d;
  for (std::size_t i : order) {
    if (!positive_finite(betas[i]) || !positive_finite(etas[i])) {
      throw ArgumentError("mixture kernel: betas and etas must be > 0");
    }
    k.nu.atoms.push_back({1.0 / (2.0 * etas[i] * etas[i]), betas[i]});
    k.params.betas.push_back(betas[i]);
    k.params.etas.push_back(etas[i]);
  }
  return k;
}

RadialKernel make_imq_kernel(int d, double c, double gamma) {
  check_dimension(d);
  if (!positive_finite(c) || !positive_finite(gamma)) throw ArgumentError("imq kernel: c and gamma must be > 0");
  RadialKernel k;
  k.family = KernelFamily::inverse_multiquadric;
  k.d = d;
  // (c^2 + r^2)^{-gamma} = c^{-2 gamma} E[e^{-T r^2}], T ~ Gamma(gamma, rate c^2).
  k.nu.gamma.push_back({gamma, c * c, std::pow(c, -2.0 * gamma)});
  k.params.c = c;
  k.params.gamma = gamma;
  return k;
}

RadialKernel make_matern_kernel(int d, double c, double tau) {
  check_dimension(d);
  if (!positive_finite(c) || !std::isfinite(tau)) throw ArgumentError("matern kernel: c must be > 0");
  if (!(tau > 0.5 * d)) throw ArgumentError("matern kernel: tau must exceed d/2");
  RadialKernel k;
  k.family = KernelFamily::matern;
  k.d = d;
  k.nu.invgamma.push_back({tau - 0.5 * d, 0.25 * c * c, 1.0});
  k.params.c = c;
  k.params.tau = tau;
  return k;
}

RadialKernel make_custom_kernel(int d, NuMeasure nu) {
  check_dimension(d);
  nu.validate();
  RadialKernel k;
  k.family = KernelFamily::custom;
  k.d = d;
  k.nu = std::move(nu);
  return k;
}

QuadratureResult integrate_nu(const NuMeasure& nu, const std::function<double(double)>& f,
                              const QuadratureOptions& opts) {
  QuadratureResult out;
  for (const auto& a : nu.atoms) out.value += a.mass * f(a.t);
  for (const auto& dens : densities(nu)) out += integrate_component(dens, f, opts);
  return out;
}

QuadratureResult integrate_nu_pair(const NuMeasure& nu,
                                   const std::function<double(double, double)>& f,
                                   const QuadratureOptions& opts) {
  QuadratureResult out;
  const auto comps = densities(nu);
  for (const auto& a : nu.atoms) {
    for (const auto& b : nu.atoms) out.value += a.mass * b.mass * f(a.t, b.t);
  }
  for (const auto& a : nu.atoms) {
    for (const auto& dens : comps) {
      QuadratureResult left = integrate_component(dens, [&](double t) { return f(a.t, t); }, opts);
      QuadratureResult right = integrate_component(dens, [&](double t) { return f(t, a.t); }, opts);
      left.value *= a.mass;
      left.error_estimate *= a.mass;
      right.value *= a.mass;
      right.error_estimate *= a.mass;
      out += left;
      out += right;
    }
  }
  QuadratureOptions inner_opts = opts;
  inner_opts.abs_tol = 0.1 * opts.abs_tol;
  inner_opts.rel_tol = 0.1 * opts.rel_tol;
  for (const auto& outer : comps) {
    for (const auto& inner : comps) {
      bool inner_ok = true;
      double inner_err = 0.0;
      auto g = [&](double t1) {
        QuadratureResult r = integrate_component(inner, [&](double t2) { return f(t1, t2); }, inner_opts);
        inner_ok = inner_ok && r.converged;
        inner_err = std::max(inner_err, r.error_estimate);
        return r.value;
      };
      QuadratureResult r = integrate_component(outer, g, opts);
      r.converged = r.converged && inner_ok;
      r.error_estimate += inner_err * std::exp(outer.log_norm);
      out += r;
    }
  }
  return out;
}

double checked_value(const QuadratureResult& r, const char* operation) {
  if (!r.converged) {
    std::ostringstream msg;
    msg << operation << ": quadrature did not converge (estimate " << r.value << ", error estimate "
        << r.error_estimate << ")";
    throw IntegrationError(msg.str(), r.value, r.error_estimate);
  }
  return r.value;
}

bool moment_condition_holds(const NuMeasure& nu, int d) {
  for (const auto& a : nu.atoms) {
    if (a.t == 0.0) return false;
  }
  for (const auto& g : nu.gamma) {
    if (!(g.shape > 0.5 * d)) return false;
  }
  return true;
}

bool square_integrable(const NuMeasure& nu, int d) {
  for (const auto& a : nu.atoms) {
    if (a.t == 0.0) return false;
  }
  for (const auto& g : nu.gamma) {
    if (!(g.shape > 0.25 * d)) return false;
  }
  return true;
}

double eval_psi(const RadialKernel& k, double r2) {
  if (!(r2 >= 0.0)) throw ArgumentError("eval_psi: r2 must be >= 0");
  double value = 0.0;
  for (const auto& a : k.nu.atoms) value += a.mass * std::exp(-a.t * r2);
  for (const auto& g : k.nu.gamma) value += g.weight * std::exp(-g.shape * std::log1p(r2 / g.rate));
  if (!k.nu.invgamma.empty()) {
    NuMeasure only;
    only.invgamma = k.nu.invgamma;
    value += checked_value(integrate_nu(only, [r2](double t) { return std::exp(-t * r2); }), "eval_psi");
  }
  return value;
}

double eval_psi_gap(const RadialKernel& k, double r2) {
  if (!(r2 >= 0.0)) throw ArgumentError("eval_psi_gap: r2 must be >= 0");
  double value = 0.0;
  for (const auto& a : k.nu.atoms) value -= a.mass * std::expm1(-a.t * r2);
  for (const auto& g : k.nu.gamma) value -= g.weight * std::expm1(-g.shape * std::log1p(r2 / g.rate));
  if (!k.nu.invgamma.empty()) {
    NuMeasure only;
    only.invgamma = k.nu.invgamma;
    value -= checked_value(integrate_nu(only, [r2](double t) { return std::expm1(-t * r2); }),
                           "eval_psi_gap");
  }
  return value;
}

namespace {
void require_moment_condition(const RadialKernel& k, const char* operation) {
  if (!moment_condition_holds(k.nu, k.d)) {
    throw PreconditionError(std::string(operation) +
                            ": moment condition int t^{-d/2} dnu(t) < inf does not hold");
  }
}
void require_square_integrable(const RadialKernel& k, const char* operation) {
  if (!square_integrable(k.nu, k.d)) {
    throw PreconditionError(std::string(operation) +
                            ": psi is not square integrable (int int (t1+t2)^{-d/2} dnu dnu = inf)");
  }
}
}  // namespace

double spectral_density(const RadialKernel& k, double w_norm2) {
  if (!(w_norm2 >= 0.0)) throw ArgumentError("spectral_density: w_norm2 must be >= 0");
  require_moment_condition(k, "spectral_density");
  const double half_d = 0.5 * k.d;
  auto f = [=](double t) { return std::exp(-half_d * std::log(2.0 * t) - w_norm2 / (4.0 * t)); };
  return checked_value(integrate_nu(k.nu, f), "spectral_density");
}

std::optional<NuMeasure> l2_profile_measure(const RadialKernel& k) {
  require_square_integrable(k, "l2_profile_measure");
  const double half_d = 0.5 * k.d;
  NuMeasure rho;
  if (k.nu.atoms_only()) {
    for (const auto& a : k.nu.atoms) {
      for (const auto& b : k.nu.atoms) {
        const double s = a.t + b.t;
        rho.atoms.push_back({1.0 / (1.0 / a.t + 1.0 / b.t), a.mass * b.mass * std::exp(half_d * std::log(M_PI / s))});
      }
    }
    return rho;
  }
  if (!k.nu.atoms.empty() || !k.nu.gamma.empty() || k.nu.invgamma.size() != 1) return std::nullopt;
  // InvGamma(a, b) is Matern with tau = a + d/2 and c^2 = 4b; the spectral
  // density squares, so the convolution has shape 2a + d/2 and the same scale.
  // Its mass is |psi|_2^2 = 2^d pi^{d/2} c^{-d} G(2a + d/2) G(a + d/2)^2 / (G(2a + d) G(a)^2).
  const auto& g = k.nu.invgamma.front();
  const double a = g.shape;
  const double c2 = 4.0 * g.scale;
  const double log_mass = 2.0 * std::log(g.weight) + k.d * std::log(2.0) + half_d * std::log(M_PI) -
                          half_d * std::log(c2) + std::lgamma(2.0 * a + half_d) + 2.0 * std::lgamma(a + half_d) -
                          std::lgamma(2.0 * a + k.d) - 2.0 * std::lgamma(a);
  rho.invgamma.push_back({2.0 * a + half_d, g.scale, std::exp(log_mass)});
  return rho;
}

namespace {

// nu = w Gamma(g, rate b). With s = t1 + t2 and u = t1 / s, s ~ Gamma(2g, b)
// and u ~ Beta(g, g) are independent and the s-integral is elementary, so
// psi * psi(r2) = w^2 (pi b)^{d/2} G(p) / G(2g) E_u[(1 + r2 u (1 - u) / b)^{-p}]
// with p = 2g - d/2 > 0. u = y^{1/g} removes the endpoint singularity of the
// Beta density on [0, 1/2]; symmetry covers the other half.
double single_gamma_l2(const GammaComponent& c, int d, double r2, bool gap, const char* op) {
  const double g = c.shape;
  const double b = c.rate;
  const double half_d = 0.5 * d;
  const double p = 2.0 * g - half_d;
  const double log_k = 2.0 * std::log(c.weight) + half_d * std::log(M_PI * b) + std::lgamma(p) + std::log(2.0) -
                       std::log(g) - 2.0 * std::lgamma(g);
  auto f = [=](double y) {
    const double u = std::pow(y, 1.0 / g);
    const double x = r2 * u * (1.0 - u) / b;
    const double tail = gap ? -std::expm1(-p * std::log1p(x)) : std::exp(-p * std::log1p(x));
    return std::pow(1.0 - u, g - 1.0) * tail;
  };
  QuadratureOptions opts;
  opts.abs_tol = 1e-13;
  opts.rel_tol = 1e-11;
  return std::exp(log_k) * checked_value(integrate_interval(f, 0.0, std::pow(2.0, -g), opts), op);
}

bool single_gamma(const NuMeasure& nu) { return nu.atoms.empty() && nu.invgamma.empty() && nu.gamma.size() == 1; }

}  // namespace

double psi_l2_cross(const RadialKernel& k, double z_norm2) {
  if (!(z_norm2 >= 0.0)) throw ArgumentError("psi_l2_cross: z_norm2 must be >= 0");
  if (const auto rho = l2_profile_measure(k)) {
    return checked_value(integrate_nu(*rho, [=](double s) { return std::exp(-s * z_norm2); }), "psi_l2_cross");
  }
  if (single_gamma(k.nu)) return single_gamma_l2(k.nu.gamma.front(), k.d, z_norm2, false, "psi_l2_cross");
  return psi_l2_cross_pair(k, z_norm2);
}

double psi_l2_cross_gap(const RadialKernel& k, double z_norm2) {
  if (!(z_norm2 >= 0.0)) throw ArgumentError("psi_l2_cross_gap: z_norm2 must be >= 0");
  if (const auto rho = l2_profile_measure(k)) {
    return checked_value(integrate_nu(*rho, [=](double s) { return -std::expm1(-s * z_norm2); }),
                         "psi_l2_cross_gap");
  }
  if (single_gamma(k.nu)) return single_gamma_l2(k.nu.gamma.front(), k.d, z_norm2, true, "psi_l2_cross_gap");
  const double half_d = 0.5 * k.d;
  auto f = [=](double t1, double t2) {
    const double s = t1 + t2;
    return -std::exp(half_d * std::log(M_PI / s)) * std::expm1(-z_norm2 / (1.0 / t1 + 1.0 / t2));
  };
  return checked_value(integrate_nu_pair(k.nu, f), "psi_l2_cross_gap");
}

double psi_l2_cross_pair(const RadialKernel& k, double z_norm2) {
  if (!(z_norm2 >= 0.0)) throw ArgumentError("psi_l2_cross_pair: z_norm2 must be >= 0");
  require_square_integrable(k, "psi_l2_cross_pair");
  const double half_d = 0.5 * k.d;
  auto f = [=](double t1, double t2) {
    const double s = t1 + t2;
    return std::exp(half_d * std::log(M_PI / s) - z_norm2 / (1.0 / t1 + 1.0 / t2));
  };
  return checked_value(integrate_nu_pair(k.nu, f), "psi_l2_cross_pair");
}

KernelConstants kernel_constants(const RadialKernel& k) {
  KernelConstants out;
  out.Z_nu = k.nu.total_mass();
  out.C_k_rkhs = out.Z_nu;
  const double half_d = 0.5 * k.d;
  if (k.family == KernelFamily::inverse_multiquadric && k.params.gamma > 0.25 * k.d) {
    const double g = k.params.gamma;
    const double v = std::pow(k.params.c, k.d - 4.0 * g) * std::pow(M_PI, half_d) *
                     std::exp(std::lgamma(2.0 * g - half_d) - std::lgamma(2.0 * g));
    out.psi_l2_sq = v;
    out.C_k_l2 = v;
    return out;
  }
  if (square_integrable(k.nu, k.d)) out.psi_l2_sq = psi_l2_cross(k, 0.0);
  if (moment_condition_holds(k.nu, k.d)) {
    auto f = [=](double t) { return std::exp(half_d * std::log(M_PI / (2.0 * t))); };
    out.C_k_l2 = out.Z_nu * checked_value(integrate_nu(k.nu, f), "kernel_constants");
  }
  return out;
}

double nu_interval_mass(const NuMeasure& nu, double lo, double hi) {
  if (std::isnan(lo) || std::isnan(hi) || lo < 0.0) throw ArgumentError("nu_interval_mass: requires 0 <= lo");
  if (lo > hi) throw ArgumentError("nu_interval_mass: requires lo <= hi");
  using boost::math::gamma_q;
  double mass = 0.0;
  for (const auto& a : nu.atoms) {
    if (a.t >= lo && a.t <= hi) mass += a.mass;
  }
  for (const auto& g : nu.gamma) {
    const double q_lo = gamma_q(g.shape, g.rate * lo);
    const double q_hi = hi == kInf ? 0.0 : gamma_q(g.shape, g.rate * hi);
    mass += g.weight * (q_lo - q_hi);
  }
  for (const auto& g : nu.invgamma) {
    // T <= x  <=>  1/T >= 1/x, and 1/T ~ Gamma(shape, rate = scale).
    const double p_hi = hi == kInf ? 1.0 : gamma_q(g.shape, g.scale / hi);
    const double p_lo = lo == 0.0 ? 0.0 : gamma_q(g.shape, g.scale / lo);
    mass += g.weight * (p_hi - p_lo);
  }
  return std::clamp(mass, 0.0, nu.total_mass());
}

double nu_quantile(const NuMeasure& nu, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ArgumentError("nu_quantile: fraction must be in (0, 1]");
  const double target = fraction * nu.total_mass();
  auto cdf = [&](double t) { return nu_interval_mass(nu, 0.0, t); };
  if (cdf(0.0) >= target) return 0.0;
  double lo = 1.0;
  double hi = 1.0;
  while (cdf(lo) >= target) lo *= 0.5;
  while (cdf(hi) < target) hi *= 2.0;
  // cdf(lo) < target <= cdf(hi); bisect in log scale.
  for (int it = 0; it < 200 && hi > lo * (1.0 + 4.0 * std::numeric_limits<double>::epsilon()); ++it) {
    const double mid = std::sqrt(lo * hi);
    if (!(mid > lo && mid < hi)) break;
    if (cdf(mid) >= target) hi = mid;
    else lo = mid;
  }
  for (const auto& a : nu.atoms) {
    if (a.t <= hi && a.t > lo) return a.t;
  }
  return hi;
}

}  // namespace kme
