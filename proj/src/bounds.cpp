#include "kme/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kme/errors.hpp"

namespace kme {

namespace {

constexpr double kE = 2.718281828459045235360287;
constexpr int kHardFamilyN = 5;

void check_n(long n, const char* op) {
  if (n < 1) throw ArgumentError(std::string(op) + ": n must be >= 1");
}

void check_positive(double x, const char* what, const char* op) {
  if (!(std::isfinite(x) && x > 0.0)) throw ArgumentError(std::string(op) + ": " + what + " must be finite and > 0");
}

// Mass of nu on (0, inf); positive for every validated measure.
double positive_mass(const NuMeasure& nu) {
  double at_zero = 0.0;
  for (const auto& a : nu.atoms) {
    if (a.t == 0.0) at_zero += a.mass;
  }
  return nu.total_mass() - at_zero;
}

void require_nondegenerate(const RadialKernel& k, const char* op) {
  if (!(positive_mass(k.nu) > 0.0)) throw PreconditionError(std::string(op) + ": supp(nu) must not be {0}");
}

// Smallest t > 0 with nu((0, t]) >= fraction * nu((0, inf)).
double positive_quantile(const NuMeasure& nu, double fraction) {
  const double z = nu.total_mass();
  const double pos = positive_mass(nu);
  return nu_quantile(nu, std::min(1.0, (z - pos + fraction * pos) / z));
}

double dim_factor(int d) { return 1.0 - 2.0 / (2.0 + d); }

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double beta = 0.0;
  std::string branch;
};

// Gamma-type lower bound on the mass of [g/(2b), g/b] for Gamma(g, b) or of
// the reflected interval for InvGamma(g, b); boundary g = 1 takes the first branch.
double gamma_window_beta(double g) {
  if (g >= 1.0) return std::exp(g * std::log(g / (2.0 * kE)) - std::lgamma(g));
  return 0.5 * std::exp(g * std::log(g / kE) - std::lgamma(g));
}

Interval interval_for(const RadialKernel& k) {
  require_nondegenerate(k, "interval_for");
  const auto& p = k.params;
  switch (k.family) {
    case KernelFamily::gaussian: {
      const double t = 1.0 / (2.0 * p.eta * p.eta);
      return {t, t, 1.0, "gaussian"};
    }
    case KernelFamily::gaussian_mixture: {
      double cm = 0.0;
      for (double b : p.betas) cm += b;
      const double e1 = p.etas.front();
      const double em = p.etas.back();
      return {1.0 / (2.0 * e1 * e1), 1.0 / (2.0 * em * em), cm, "mixture"};
    }
    case KernelFamily::inverse_multiquadric: {
      const double g = p.gamma;
      const double c2 = p.c * p.c;
      return {g / (2.0 * c2), g / c2, std::pow(p.c, -2.0 * g) * gamma_window_beta(g),
              g >= 1.0 ? "gamma>=1" : "gamma<1"};
    }
    case KernelFamily::matern: {
      const double g = p.tau - 0.5 * k.d;
      if (!(g > 0.0)) throw ArgumentError("matern kernel: tau must exceed d/2");
      const double ct2 = 0.25 * p.c * p.c;
      return {ct2 / g, 2.0 * ct2 / g, gamma_window_beta(g), g >= 1.0 ? "tau-d/2>=1" : "tau-d/2<1"};
    }
    case KernelFamily::custom: {
      const double lo = positive_quantile(k.nu, 0.25);
      const double hi = positive_quantile(k.nu, 0.75);
      return {lo, hi, nu_interval_mass(k.nu, lo, hi), "custom-quartiles"};
    }
  }
  throw ArgumentError("interval_for: unknown kernel family");
}

// Tabulated closed forms written in the family parameters, independent of Interval.
std::optional<double> printed_bk(const RadialKernel& k) {
  const auto& p = k.params;
  switch (k.family) {
    case KernelFamily::gaussian: return 1.0;
    case KernelFamily::gaussian_mixture: {
      double cm = 0.0;
      for (double b : p.betas) cm += b;
      return cm * p.etas.back() * p.etas.back() / (p.etas.front() * p.etas.front());
    }
    case KernelFamily::inverse_multiquadric: {
      const double g = p.gamma;
      const double cpow = std::pow(p.c, -2.0 * g);
      if (g >= 1.0) return cpow / (2.0 * std::tgamma(g)) * std::pow(g / (2.0 * kE), g);
      return cpow / (4.0 * std::tgamma(g)) * std::pow(g / kE, g);
    }
    case KernelFamily::matern: {
      const double g = p.tau - 0.5 * k.d;
      const double twotau_d = 2.0 * p.tau - k.d;
      if (g >= 1.0) return 1.0 / (2.0 * std::tgamma(g)) * std::pow(twotau_d / (4.0 * kE), g);
      return 1.0 / (4.0 * std::tgamma(g)) * std::pow(twotau_d / (2.0 * kE), g);
    }
    case KernelFamily::custom: return std::nullopt;
  }
  return std::nullopt;
}

std::optional<double> printed_ak(const RadialKernel& k) {
  const auto& p = k.params;
  const double d = k.d;
  switch (k.family) {
    case KernelFamily::gaussian: return std::pow(2.0 * p.eta * p.eta, d / 2.0);
    case KernelFamily::gaussian_mixture: {
      double cm = 0.0;
      for (double b : p.betas) cm += b;
      return cm * cm * std::pow(2.0 * p.etas.back() * p.etas.back(), d / 2.0);
    }
    case KernelFamily::inverse_multiquadric: {
      const double g = p.gamma;
      const double gam2 = std::tgamma(g) * std::tgamma(g);
      const double num = std::pow(p.c, d - 4.0 * g) * std::pow(g, 2.0 * g - d / 2.0);
      if (g >= 1.0) return num / (gam2 * std::pow(2.0 * kE, 2.0 * g));
      return num / (4.0 * gam2 * std::exp(2.0 * g));
    }
    case KernelFamily::matern: {
      const double g = p.tau - d / 2.0;
      const double pre = std::pow(p.c, -d) * std::exp(-2.0 * g) / (std::tgamma(g) * std::tgamma(g));
      if (g >= 1.0) return pre * std::pow(g / 2.0, 2.0 * g + d / 2.0);
      return pre * std::pow(g, 2.0 * g + d / 2.0) / std::pow(2.0, 2.0 + d / 2.0);
    }
    case KernelFamily::custom: return std::nullopt;
  }
  return std::nullopt;
}

std::optional<double> printed_bk_l2(const RadialKernel& k) {
  const auto& p = k.params;
  const double d = k.d;
  switch (k.family) {
    case KernelFamily::gaussian: return std::pow(2.0 * p.eta * p.eta, d / 2.0);
    case KernelFamily::gaussian_mixture: {
      double cm = 0.0;
      for (double b : p.betas) cm += b;
      const double e1 = p.etas.front();
      const double em = p.etas.back();
      return cm * cm * std::pow(2.0, d / 2.0) * std::pow(em, d + 2.0) / (e1 * e1);
    }
    case KernelFamily::inverse_multiquadric: {
      const double g = p.gamma;
      const double gam2 = std::tgamma(g) * std::tgamma(g);
      const double num = std::pow(p.c, d - 4.0 * g) * std::pow(g, 2.0 * g - d / 2.0);
      if (g >= 1.0) return num / (2.0 * gam2 * std::pow(2.0 * kE, 2.0 * g));
      return num / (8.0 * gam2 * std::exp(2.0 * g));
    }
    case KernelFamily::matern: {
      const double g = p.tau - d / 2.0;
      const double pre = std::pow(p.c, -d) * std::exp(-2.0 * g) / (std::tgamma(g) * std::tgamma(g));
      if (g >= 1.0) return pre / 2.0 * std::pow(g / 2.0, 2.0 * g + d / 2.0);
      return pre * std::pow(g, 2.0 * g + d / 2.0) / std::pow(2.0, 3.0 + d / 2.0);
    }
    case KernelFamily::custom: return std::nullopt;
  }
  return std::nullopt;
}

double cor10_factor(double delta1, int d) { return std::pow(M_PI / (2.0 * delta1), 0.5 * d); }

BoundReport base_report(const std::string& theorem, const RadialKernel& k, long n) {
  BoundReport r;
  r.theorem = theorem;
  r.kernel_label = kernel_label(k);
  r.d = k.d;
  r.n = n;
  return r;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

BoundReport strong_convexity_bound(const char* theorem, double c_psi, double eps_psi, long n) {
  check_positive(c_psi, "c_psi", theorem);
  check_positive(eps_psi, "eps_psi", theorem);
  check_n(n, theorem);
  BoundReport r;
  r.theorem = theorem;
  r.n = n;
  r.s = 0.5 * std::sqrt(c_psi / (2.0 * n));
  r.probability_floor = 0.25;
  const double n_min = 1.0 / eps_psi;
  const bool ok = static_cast<double>(n) >= n_min;
  r.preconditions.push_back({"n>=1/eps_psi", ok, "n = " + std::to_string(n) + ", 1/eps_psi = " + fmt(n_min)});
  r.constants = {{"c_psi", c_psi}, {"eps_psi", eps_psi}};
  if (!ok) {
    r.fallback_s = *r.s * std::sqrt(eps_psi);
    r.fallback_floor = std::max(0.25 * std::exp(-eps_psi / 2.0), (1.0 - std::sqrt(eps_psi / 4.0)) / 2.0);
  }
  return r;
}

}  // namespace

bool BoundReport::all_preconditions_hold() const {
  return std::all_of(preconditions.begin(), preconditions.end(), [](const Precondition& p) { return p.satisfied; });
}

double BoundReport::constant(const std::string& name) const {
  for (const auto& [key, value] : constants) {
    if (key == name) return value;
  }
  throw ArgumentError("BoundReport: no constant named '" + name + "'");
}

std::string kernel_label(const RadialKernel& k) {
  std::ostringstream os;
  os.precision(6);
  os << family_name(k.family) << "(";
  const auto& p = k.params;
  switch (k.family) {
    case KernelFamily::gaussian: os << "eta=" << p.eta; break;
    case KernelFamily::gaussian_mixture:
      os << "betas=[";
      for (std::size_t i = 0; i < p.betas.size(); ++i) os << (i ? "," : "") << p.betas[i];
      os << "],etas=[";
      for (std::size_t i = 0; i < p.etas.size(); ++i) os << (i ? "," : "") << p.etas[i];
      os << "]";
      break;
    case KernelFamily::inverse_multiquadric: os << "c=" << p.c << ",gamma=" << p.gamma; break;
    case KernelFamily::matern: os << "c=" << p.c << ",tau=" << p.tau; break;
    case KernelFamily::custom:
      os << "atoms=" << k.nu.atoms.size() << ",gamma=" << k.nu.gamma.size() << ",invgamma=" << k.nu.invgamma.size();
      break;
  }
  os << ",d=" << k.d << ")";
  return os.str();
}

AlphaChoice alpha_for(const RadialKernel& k) {
  require_nondegenerate(k, "alpha_for");
  const auto& p = k.params;
  switch (k.family) {
    case KernelFamily::gaussian: return {1.0 / (2.0 * p.eta * p.eta), 1.0};
    case KernelFamily::gaussian_mixture: {
      double cm = 0.0;
      for (double b : p.betas) cm += b;
      return {1.0 / (2.0 * p.etas.front() * p.etas.front()), cm};
    }
    case KernelFamily::inverse_multiquadric:
      return {nu_quantile(k.nu, 0.5), std::pow(p.c, -2.0 * p.gamma) / 2.0};
    case KernelFamily::matern: return {nu_quantile(k.nu, 0.5), 0.5};
    case KernelFamily::custom: return {positive_quantile(k.nu, 0.5), positive_mass(k.nu) / 2.0};
  }
  throw ArgumentError("alpha_for: unknown kernel family");
}

ZBeta find_z_beta(const RadialKernel& k) {
  const AlphaChoice a = alpha_for(k);
  return {1.0 / a.t1, a.alpha / 2.0};
}

ZBeta find_z_beta(const std::function<double(double)>& psi_gap, double r_min, double r_max) {
  if (!(r_min > 0.0 && r_max > r_min && std::isfinite(r_max))) {
    throw ArgumentError("find_z_beta: requires 0 < r_min < r_max < inf");
  }
  constexpr int kGrid = 256;
  const double lmin = std::log(r_min);
  const double step = (std::log(r_max) - lmin) / (kGrid - 1);
  auto gap_at = [&](double logr) {
    const double r = std::exp(logr);
    return psi_gap(r * r);
  };
  int best = 0;
  double best_gap = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    const double g = gap_at(lmin + i * step);
    if (g > best_gap) {
      best_gap = g;
      best = i;
    }
  }
  // Golden-section refinement on the bracketing cells.
  double a = lmin + std::max(0, best - 1) * step;
  double b = lmin + std::min(kGrid - 1, best + 1) * step;
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = gap_at(x1);
  double f2 = gap_at(x2);
  for (int it = 0; it < 80 && b - a > 1e-12; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = gap_at(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = gap_at(x1);
    }
  }
  double logr = lmin + best * step;
  const double refined = std::max(f1, f2);
  if (refined > best_gap) {
    best_gap = refined;
    logr = f1 >= f2 ? x1 : x2;
  }
  if (!(best_gap > 0.0)) throw PreconditionError("find_z_beta: psi(0) - psi(z) is not positive anywhere on the grid");
  const double r = std::exp(logr);
  return {r * r, best_gap};
}

IntervalConstant bk_for(const RadialKernel& k) {
  const Interval iv = interval_for(k);
  return {iv.lo, iv.hi, iv.beta, iv.beta * iv.lo / iv.hi, printed_bk(k), iv.branch};
}

IntervalConstant ak_for(const RadialKernel& k) {
  const Interval iv = interval_for(k);
  return {iv.lo, iv.hi, iv.beta, iv.beta * iv.beta * std::pow(iv.hi, -0.5 * k.d), printed_ak(k), iv.branch};
}

IntervalConstant bk_l2_for(const RadialKernel& k) {
  const Interval iv = interval_for(k);
  const double v = iv.beta * iv.beta * iv.lo * std::pow(iv.hi, -0.5 * (k.d + 2));
  return {iv.lo, iv.hi, iv.beta, v, printed_bk_l2(k), iv.branch};
}

BoundReport bound_thm1(double beta, long n) {
  check_positive(beta, "beta", "bound_thm1");
  check_n(n, "bound_thm1");
  BoundReport r;
  r.theorem = "thm1";
  r.n = n;
  r.s = std::sqrt(2.0 * beta / n) / 6.0;
  r.probability_floor = 0.25;
  r.constants = {{"beta", beta}};
  return r;
}

BoundReport bound_cor2(double alpha, long n) {
  check_positive(alpha, "alpha", "bound_cor2");
  check_n(n, "bound_cor2");
  BoundReport r;
  r.theorem = "cor2";
  r.n = n;
  r.s = std::sqrt(alpha / n) / 6.0;
  r.probability_floor = 0.25;
  r.constants = {{"alpha", alpha}};
  return r;
}

HardFamilyConstants hard_family_constants(const RadialKernel& k, long n, Norm norm) {
  check_n(n, "hard_family_constants");
  HardFamilyConstants h;
  h.norm = norm;
  h.N = kHardFamilyN;
  const double N = h.N;
  const double packing = std::log(N) - 1.0 / (N - 1.0);
  const int d = k.d;
  if (norm == Norm::rkhs) {
    const IntervalConstant bk = bk_for(k);
    h.sigma2 = 1.0 / (2.0 * bk.hi * d);
    const double C = bk.beta * bk.lo / (32.0 * bk.hi) * packing;
    h.c_nu = C / (bk.beta * bk.lo);
    h.distance_factor = bk.beta * bk.lo / kE * dim_factor(d);
    h.theorem_s = std::sqrt(bk.value / kE * dim_factor(d) / n) / 50.0;
  } else {
    if (!moment_condition_holds(k.nu, d)) {
      throw PreconditionError("hard_family_constants: the L2 family needs int t^{-d/2} dnu < inf");
    }
    const IntervalConstant ak = ak_for(k);
    h.sigma2 = 1.0 / (ak.hi * d);
    h.c_nu = packing / (16.0 * ak.hi);
    const double factor = cor10_factor(ak.hi, d);
    h.distance_factor = ak.beta * ak.beta * ak.lo / (2.0 * kE) * dim_factor(d) * factor;
    h.theorem_s =
        std::sqrt(factor * (ak.beta * ak.beta * ak.lo / (ak.hi * kE)) * dim_factor(d) / n) / 50.0;
  }
  // Packing points are N^{-1} sqrt(c_nu / n) apart.
  h.construction_s = std::sqrt(h.distance_factor * h.c_nu / n) / (2.0 * N);
  return h;
}

BoundReport bound_thm8(const RadialKernel& k, long n) {
  check_n(n, "bound_thm8");
  BoundReport r = base_report("thm8", k, n);
  const IntervalConstant bk = bk_for(k);
  const HardFamilyConstants h = hard_family_constants(k, n, Norm::rkhs);
  r.s = std::sqrt(bk.value / kE * dim_factor(k.d) / n) / 50.0;
  r.probability_floor = 0.2;
  r.preconditions.push_back({"nu([t0,t1])>=beta", nu_interval_mass(k, bk.lo, bk.hi) >= bk.beta * (1.0 - 1e-12),
                             "branch " + bk.branch});
  r.constants = {{"t0", bk.lo},          {"t1", bk.hi},         {"beta", bk.beta},
                 {"B_k", bk.value},      {"Z_nu", k.nu.total_mass()}, {"sigma2", h.sigma2},
                 {"C", h.c_nu * bk.beta * bk.lo}, {"c_nu", h.c_nu}, {"N", static_cast<double>(h.N)},
                 {"construction_s", h.construction_s}};
  if (bk.printed) r.constants.emplace_back("B_k_printed", *bk.printed);
  return r;
}

BoundReport bound_thmE1(const RadialKernel& k, long n) {
  check_n(n, "bound_thmE1");
  BoundReport r = base_report("thmE1", k, n);
  const IntervalConstant bk = bk_for(k);
  const double Z = k.nu.total_mass();
  r.s = std::sqrt(bk.value / kE * dim_factor(k.d) / (2.0 * n)) / 50.0;
  r.probability_floor = 0.2;
  // Ratio first so that t1 = t0 and Z = beta give exactly 24.
  const double n_min = 24.0 * (bk.hi / bk.lo) * (Z / bk.beta);
  r.preconditions.push_back({"n>=24*t1*Z_nu/(beta*t0)", static_cast<double>(n) >= n_min,
                             "n = " + std::to_string(n) + ", required " + fmt(n_min)});
  r.constants = {{"t0", bk.lo}, {"t1", bk.hi}, {"beta", bk.beta}, {"B_k", bk.value}, {"Z_nu", Z}, {"n_min", n_min}};
  return r;
}

BoundReport bound_thm9(const RadialKernel& k, double z_norm2, long n) {
  check_n(n, "bound_thm9");
  check_positive(z_norm2, "|z|^2", "bound_thm9");
  BoundReport r = base_report("thm9", k, n);
  r.probability_floor = 0.25;
  const bool l2 = square_integrable(k.nu, k.d);
  r.preconditions.push_back({"psi_square_integrable", l2, "int int (t1+t2)^{-d/2} dnu dnu < inf"});
  r.constants = {{"z_norm2", z_norm2}};
  if (!l2) return r;
  const double cz = 2.0 * psi_l2_cross_gap(k, z_norm2);
  if (!(cz > 0.0)) throw ConsistencyError("bound_thm9: C_z must be positive for a characteristic kernel");
  r.constants.emplace_back("C_z", cz);
  r.s = std::sqrt(cz / n) / 6.0;
  return r;
}

BoundReport bound_cor10(const RadialKernel& k, long n) {
  check_n(n, "bound_cor10");
  BoundReport r = base_report("cor10", k, n);
  r.probability_floor = 0.25;
  const bool l2 = square_integrable(k.nu, k.d);
  r.preconditions.push_back({"psi_square_integrable", l2,
                             l2 ? "psi in L2" : "psi not in L2 (the moment condition fails as well)"});
  const IntervalConstant ak = ak_for(k);
  r.constants = {{"delta0", ak.lo}, {"delta1", ak.hi}, {"beta", ak.beta}, {"A_k", ak.value}};
  if (ak.printed) r.constants.emplace_back("A_k_printed", *ak.printed);
  if (!l2) return r;
  const double factor = cor10_factor(ak.hi, k.d);
  const double target = 0.5 * ak.beta * ak.beta * factor;
  double z2 = 1.0 / ak.lo;
  double gap = psi_l2_cross_gap(k, z2);
  int doublings = 0;
  while (gap < target) {
    if (++doublings > 60) {
      throw ConstructionError("bound_cor10: no |z| within 60 doublings meets the cross-correlation slack");
    }
    z2 *= 4.0;  // doubles |z|
    gap = psi_l2_cross_gap(k, z2);
  }
  r.preconditions.push_back({"cross_gap_slack", true, "|z|^2 = " + fmt(z2) + " after " + std::to_string(doublings) +
                                                          " doublings"});
  r.constants.emplace_back("z_norm2", z2);
  r.constants.emplace_back("cross_gap", gap);
  r.constants.emplace_back("cross_gap_target", target);
  r.s = ak.beta / 6.0 * std::sqrt(factor / n);
  return r;
}

BoundReport bound_thm13(const RadialKernel& k, long n) {
  check_n(n, "bound_thm13");
  BoundReport r = base_report("thm13", k, n);
  r.probability_floor = 0.2;
  const bool moment = moment_condition_holds(k.nu, k.d);
  r.preconditions.push_back({"moment_condition", moment, "int t^{-d/2} dnu < inf"});
  const IntervalConstant bl = bk_l2_for(k);
  r.constants = {{"delta0", bl.lo}, {"delta1", bl.hi}, {"beta", bl.beta}, {"B_k_l2", bl.value}};
  if (bl.printed) r.constants.emplace_back("B_k_l2_printed", *bl.printed);
  if (!moment) return r;
  const double factor = cor10_factor(bl.hi, k.d);
  r.s = std::sqrt(factor * (bl.beta * bl.beta * bl.lo / (bl.hi * kE)) * dim_factor(k.d) / n) / 50.0;
  const HardFamilyConstants h = hard_family_constants(k, n, Norm::l2);
  r.constants.emplace_back("sigma2", h.sigma2);
  r.constants.emplace_back("c_nu", h.c_nu);
  r.constants.emplace_back("N", static_cast<double>(h.N));
  r.constants.emplace_back("construction_s", h.construction_s);
  return r;
}

BoundReport bound_thm6(double c_psi, double eps_psi, long n) { return strong_convexity_bound("thm6", c_psi, eps_psi, n); }

BoundReport bound_thm12(double c_psi, double eps_psi, long n) {
  return strong_convexity_bound("thm12", c_psi, eps_psi, n);
}

// ---------------------------------------------------------------------------
// Strong convexity.

namespace {

// F along a direction at angle phi to a: A(r2) - B(r2) r2 cos^2 phi.
struct RadialParts {
  double A = 0.0;
  double B = 0.0;
  double error = 0.0;
};

RadialParts radial_parts(const RadialKernel& k, double sigma2, Norm norm, double r2) {
  const double half_d = 0.5 * k.d;
  auto base = [=](double s) {
    const double den = 4.0 * sigma2 * s + 1.0;
    const double q = s / den;
    return std::exp(-q * r2 - half_d * std::log(den)) * q;
  };
  const QuadratureResult a = integrate_profile_measure(k, norm, [&](double s) { return 4.0 * base(s); });
  const QuadratureResult b = integrate_profile_measure(k, norm, [&](double s) {
    const double q = s / (4.0 * sigma2 * s + 1.0);
    return 8.0 * q * base(s);
  });
  RadialParts out;
  out.A = checked_value(a, "strong_convexity_objective");
  out.B = checked_value(b, "strong_convexity_objective");
  out.error = a.error_estimate + b.error_estimate;
  return out;
}

}  // namespace

double strong_convexity_objective(const RadialKernel& k, double sigma2, Norm norm, const Eigen::VectorXd& a,
                                  const Eigen::VectorXd& e) {
  check_positive(sigma2, "sigma2", "strong_convexity_objective");
  if (a.size() != k.d || e.size() != k.d) throw ArgumentError("strong_convexity_objective: dimension mismatch");
  const double en = e.norm();
  if (!(en > 0.0)) throw ArgumentError("strong_convexity_objective: direction must be nonzero");
  const double proj = a.dot(e) / en;
  const RadialParts p = radial_parts(k, sigma2, norm, a.squaredNorm());
  return p.A - p.B * proj * proj;
}

std::vector<Eigen::VectorXd> sphere_grid(int d) {
  std::vector<Eigen::VectorXd> out;
  auto unit = [d](std::initializer_list<double> xs) {
    Eigen::VectorXd v(d);
    int i = 0;
    for (double x : xs) v(i++) = x;
    return v;
  };
  switch (d) {
    case 1:
      out.push_back(unit({1.0}));
      out.push_back(unit({-1.0}));
      break;
    case 2:
      for (int i = 0; i <= 128; ++i) {
        const double th = M_PI * i / 128.0;
        out.push_back(unit({std::cos(th), std::sin(th)}));
      }
      break;
    case 3: {
      out.push_back(unit({1.0, 0.0, 0.0}));
      out.push_back(unit({-1.0, 0.0, 0.0}));
      constexpr int kPoints = 1000;
      const double golden = M_PI * (3.0 - std::sqrt(5.0));
      for (int i = 0; i < kPoints; ++i) {
        const double x = 1.0 - 2.0 * (i + 0.5) / kPoints;
        const double rho = std::sqrt(1.0 - x * x);
        const double th = golden * i;
        out.push_back(unit({x, rho * std::cos(th), rho * std::sin(th)}));
      }
      break;
    }
    case 4:
      for (int i = 0; i <= 12; ++i) {
        const double p1 = M_PI * i / 12.0;
        for (int j = 0; j <= 12; ++j) {
          const double p2 = M_PI * j / 12.0;
          for (int l = 0; l < 24; ++l) {
            const double p3 = 2.0 * M_PI * l / 24.0;
            out.push_back(unit({std::cos(p1), std::sin(p1) * std::cos(p2), std::sin(p1) * std::sin(p2) * std::cos(p3),
                                std::sin(p1) * std::sin(p2) * std::sin(p3)}));
          }
        }
      }
      break;
    default: throw ArgumentError("sphere_grid: d must be in 1..4");
  }
  return out;
}

StrongConvexityEstimate estimate_cpsi_eps(const RadialKernel& k, double sigma2, Norm norm) {
  check_positive(sigma2, "sigma2", "estimate_cpsi_eps");
  if (k.d < 1 || k.d > 4) throw ArgumentError("estimate_cpsi_eps: d must be in 1..4");
  if (norm == Norm::l2 && !moment_condition_holds(k.nu, k.d)) {
    throw PreconditionError("estimate_cpsi_eps: the L2 objective needs int t^{-d/2} dnu < inf");
  }
  const std::vector<Eigen::VectorXd> dirs = sphere_grid(k.d);
  // a is taken along e1, so only the first coordinate of a direction matters.

  StrongConvexityEstimate out;
  out.sigma2 = sigma2;
  out.d = k.d;
  out.norm = norm;
  const RadialParts zero = radial_parts(k, sigma2, norm, 0.0);
  out.F0 = zero.A;
  out.quadrature_error = zero.error;
  if (!(out.F0 > 0.0)) throw ConsistencyError("estimate_cpsi_eps: F(0) <= 0 contradicts strict positive definiteness");

  auto min_over_ball = [&](double eps, int points) {
    double m = out.F0;
    for (int j = 1; j <= points; ++j) {
      const double r2 = eps * (static_cast<double>(j) / points) * (static_cast<double>(j) / points);
      const RadialParts p = radial_parts(k, sigma2, norm, r2);
      out.quadrature_error = std::max(out.quadrature_error, p.error);
      for (const auto& e : dirs) m = std::min(m, p.A - p.B * r2 * e(0) * e(0));
    }
    return m;
  };
  auto accepted = [&](double eps) { return min_over_ball(eps, 16) >= 0.5 * out.F0; };

  double lo = 0.0;
  double hi = 0.0;
  double eps = 1.0;
  if (accepted(eps)) {
    lo = eps;
    for (int i = 0; i < 60 && hi == 0.0; ++i) {
      eps *= 2.0;
      if (accepted(eps)) lo = eps;
      else hi = eps;
    }
  } else {
    hi = eps;
    for (int i = 0; i < 60 && lo == 0.0; ++i) {
      eps *= 0.5;
      if (accepted(eps)) lo = eps;
      else hi = eps;
    }
  }
  if (lo == 0.0 || hi == 0.0) throw ConsistencyError("estimate_cpsi_eps: no admissible radius found");
  for (int i = 0; i < 40 && hi > lo * (1.0 + 1e-9); ++i) {
    const double mid = std::sqrt(lo * hi);
    if (accepted(mid)) lo = mid;
    else hi = mid;
  }
  out.eps_psi = lo;
  out.c_psi = min_over_ball(lo, 64);
  return out;
}

}  // namespace kme
