#include "kme/sweep.hpp"

#include <cmath>
#include <random>

#include "kme/errors.hpp"
#include "kme/oracle.hpp"
#include "kme/parallel.hpp"
#include "kme/rng.hpp"

namespace kme {

RadialKernel reference_kernel(KernelFamily family, int d) {
  switch (family) {
    case KernelFamily::gaussian: return make_gaussian_kernel(d, 1.0);
    case KernelFamily::gaussian_mixture: return make_mixture_kernel(d, {0.6, 0.4}, {1.0, 0.5});
    case KernelFamily::inverse_multiquadric: return make_imq_kernel(d, 1.0, 2.0);
    case KernelFamily::matern: return make_matern_kernel(d, 1.0, 0.5 * d + 1.5);
    case KernelFamily::custom: break;
  }
  throw ArgumentError("reference_kernel: no reference kernel for family " + family_name(family));
}

std::vector<KernelFamily> reference_families() {
  return {KernelFamily::gaussian, KernelFamily::gaussian_mixture, KernelFamily::inverse_multiquadric,
          KernelFamily::matern};
}

std::vector<VerifyCheck> run_verify_sweep(const VerifyConfig& config) {
  if (config.pairs < 1) throw ArgumentError("verify: pairs must be >= 1");
  if (!(config.tol > 0.0)) throw ArgumentError("verify: tol must be > 0");
  for (int d : config.dims) {
    if (d < 1 || d > 5) throw ArgumentError("verify: the oracles cover 1 <= d <= 5");
  }
  std::vector<VerifyCheck> checks;
  for (std::size_t f = 0; f < config.families.size(); ++f) {
    for (int d : config.dims) {
      for (std::size_t s = 0; s < config.sigma2s.size(); ++s) {
        for (Norm norm : config.norms) {
          for (int p = 0; p < config.pairs; ++p) {
            VerifyCheck c;
            c.family = family_name(config.families[f]);
            c.d = d;
            c.sigma2 = config.sigma2s[s];
            c.norm = norm;
            c.pair = p;
            checks.push_back(c);
          }
        }
      }
    }
  }
  parallel_for(checks.size(), config.jobs, [&](std::size_t i) {
    VerifyCheck& c = checks[i];
    const RadialKernel k = reference_kernel(family_from_name(c.family), c.d);
    // The pair depends on the cell, not on the norm, so both norms see it.
    auto engine = keyed_engine(config.seed, {static_cast<std::uint64_t>(k.family), static_cast<std::uint64_t>(c.d),
                                             static_cast<std::uint64_t>(std::llround(c.sigma2 * 1e6)),
                                             static_cast<std::uint64_t>(c.pair)});
    std::normal_distribution<double> normal(0.0, 1.0);
    IsotropicGaussian g0{Eigen::VectorXd(c.d), c.sigma2};
    IsotropicGaussian g1{Eigen::VectorXd(c.d), c.sigma2};
    for (int j = 0; j < c.d; ++j) g0.mu(j) = normal(engine);
    for (int j = 0; j < c.d; ++j) g1.mu(j) = normal(engine);
    c.delta_norm2 = (g0.mu - g1.mu).squaredNorm();
    c.closed_form = gauss_dist2(k, c.norm, g0, g1) * (1.0 + config.perturbation);
    const QuadratureResult o =
        c.norm == Norm::rkhs ? bochner_rkhs_oracle(k, g0, g1) : l2_dist_oracle(k, g0, g1);
    c.oracle = o.value;
    c.oracle_error = o.error_estimate;
    c.abs_error = std::abs(c.closed_form - c.oracle);
    c.allowed = config.tol * (1.0 + std::abs(c.closed_form));
    c.pass = o.converged && c.abs_error <= c.allowed;
  });
  return checks;
}

}  // namespace kme
