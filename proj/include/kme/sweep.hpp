#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kme/embedding.hpp"

namespace kme {

// Reference kernels of the verification sweep: Gaussian eta = 1, mixture
// betas {0.6, 0.4} with etas {1, 0.5}, IMQ c = 1 gamma = 2, Matern c = 1
// tau = d/2 + 3/2.
RadialKernel reference_kernel(KernelFamily family, int d);
std::vector<KernelFamily> reference_families();

struct VerifyConfig {
  std::vector<KernelFamily> families = reference_families();
  std::vector<Norm> norms{Norm::rkhs, Norm::l2};
  std::vector<int> dims{1, 2, 3};
  std::vector<double> sigma2s{0.5, 1.0};
  int pairs = 20;
  std::uint64_t seed = 7;
  double tol = 1e-6;  // |closed - oracle| <= tol (1 + |closed|)
  // Test mode: closed forms are multiplied by (1 + perturbation).
  double perturbation = 0.0;
  int jobs = 0;
};

struct VerifyCheck {
  std::string family;
  int d = 0;
  double sigma2 = 0.0;
  Norm norm = Norm::rkhs;
  int pair = 0;
  double delta_norm2 = 0.0;
  double closed_form = 0.0;
  double oracle = 0.0;
  double oracle_error = 0.0;
  double abs_error = 0.0;
  double allowed = 0.0;
  bool pass = false;
};

// Closed-form distances against the spectral oracles for every
// (family, d, sigma2, norm, pair); means are N(0, I) draws keyed by the cell.
std::vector<VerifyCheck> run_verify_sweep(const VerifyConfig& config);

}  // namespace kme
