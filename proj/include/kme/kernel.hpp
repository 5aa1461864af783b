#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kme/quadrature.hpp"

namespace kme {

// Radial kernels k(x, y) = psi(|x - y|^2) with psi(r2) = int e^{-t r2} dnu(t).
// nu is a finite sum of point masses, weighted Gamma densities and weighted
// inverse-Gamma densities.

struct Atom {
  double t;
  double mass;
};

// weight * rate^shape / Gamma(shape) * t^(shape-1) * e^(-rate t)
struct GammaComponent {
  double shape;
  double rate;
  double weight;
};

// weight * scale^shape / Gamma(shape) * t^(-shape-1) * e^(-scale / t)
struct InvGammaComponent {
  double shape;
  double scale;
  double weight;
};

struct NuMeasure {
  std::vector<Atom> atoms;
  std::vector<GammaComponent> gamma;
  std::vector<InvGammaComponent> invgamma;

  double total_mass() const;
  bool atoms_only() const { return gamma.empty() && invgamma.empty(); }
  // Throws ArgumentError unless every invariant of a valid measure holds.
  void validate() const;
};

enum class KernelFamily { gaussian, gaussian_mixture, inverse_multiquadric, matern, custom };

std::string family_name(KernelFamily family);
KernelFamily family_from_name(const std::string& name);

// Parameters as supplied by the user; only the fields of the family are set.
struct KernelParams {
  double eta = 0.0;
  std::vector<double> betas;
  std::vector<double> etas;  // sorted so that etas.front() is the widest component
  double c = 0.0;
  double gamma = 0.0;
  double tau = 0.0;
};

struct RadialKernel {
  KernelFamily family = KernelFamily::custom;
  int d = 1;
  NuMeasure nu;
  KernelParams params;
};

RadialKernel make_gaussian_kernel(int d, double eta);
RadialKernel make_mixture_kernel(int d, std::vector<double> betas, std::vector<double> etas);
RadialKernel make_imq_kernel(int d, double c, double gamma);
RadialKernel make_matern_kernel(int d, double c, double tau);
RadialKernel make_custom_kernel(int d, NuMeasure nu);

// int f(t) dnu(t). Atoms are summed exactly; each density component is
// integrated in u = log t, split at the component's mode.
QuadratureResult integrate_nu(const NuMeasure& nu, const std::function<double(double)>& f,
                              const QuadratureOptions& opts = {});

// int int f(t1, t2) dnu(t1) dnu(t2) as a tensor product of the component rules.
QuadratureResult integrate_nu_pair(const NuMeasure& nu,
                                   const std::function<double(double, double)>& f,
                                   const QuadratureOptions& opts = {});

// Returns value, throwing IntegrationError (with the estimate) if not converged.
double checked_value(const QuadratureResult& r, const char* operation);

// int t^{-d/2} dnu(t) < inf.
bool moment_condition_holds(const NuMeasure& nu, int d);
// int int (t1 + t2)^{-d/2} dnu dnu < inf, i.e. psi is square integrable.
bool square_integrable(const NuMeasure& nu, int d);

double eval_psi(const RadialKernel& k, double r2);
// psi(0) - psi(r2), evaluated without cancellation.
double eval_psi_gap(const RadialKernel& k, double r2);

// Spectral density lambda(w) = int (2t)^{-d/2} e^{-|w|^2 / 4t} dnu(t); it
// satisfies psi(0) = (2 pi)^{-d/2} int lambda(w) dw.
double spectral_density(const RadialKernel& k, double w_norm2);

// int psi(y) psi(y + z) dy as a function of |z|^2. Exact one-dimensional
// reductions are used for atom-only, single-Gamma and single-inverse-Gamma nu.
double psi_l2_cross(const RadialKernel& k, double z_norm2);
// The same quantity always as the double integral over nu x nu.
double psi_l2_cross_pair(const RadialKernel& k, double z_norm2);
// psi_l2_cross(0) - psi_l2_cross(z_norm2), evaluated without cancellation.
double psi_l2_cross_gap(const RadialKernel& k, double z_norm2);

// Measure rho with int psi(y) psi(y + z) dy = int e^{-s |z|^2} drho(s), when rho
// is again atoms plus components: atom-only nu, or nu a single inverse-Gamma
// component (the convolution is then Matern at twice the smoothness).
std::optional<NuMeasure> l2_profile_measure(const RadialKernel& k);

struct KernelConstants {
  double Z_nu = 0.0;
  double C_k_rkhs = 0.0;
  std::optional<double> C_k_l2;
  std::optional<double> psi_l2_sq;
};

KernelConstants kernel_constants(const RadialKernel& k);

// nu([lo, hi]) for the closed interval; hi may be +infinity.
double nu_interval_mass(const NuMeasure& nu, double lo, double hi);
inline double nu_interval_mass(const RadialKernel& k, double lo, double hi) {
  return nu_interval_mass(k.nu, lo, hi);
}

// Smallest t with nu([0, t]) >= fraction * nu([0, inf)).
double nu_quantile(const NuMeasure& nu, double fraction);

}  // namespace kme
