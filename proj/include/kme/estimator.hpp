#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "kme/embedding.hpp"

namespace kme {

using Target = std::variant<IsotropicGaussian, TwoPointDiscrete>;

void validate_target(const Target& target, int d);

// n i.i.d. draws from the target with uniform weights 1/n.
WeightedPointMeasure sample_target(const Target& target, int n, std::mt19937_64& engine);
// Deterministic in (target, n, seed).
WeightedPointMeasure sample_target(const Target& target, int n, std::uint64_t seed);

// ||mu_{P_n} - mu_P|| in the chosen norm (not squared).
double empirical_error(const RadialKernel& k, const WeightedPointMeasure& sample, const Target& target,
                       Norm norm);
// Same, for several norms from one sample.
std::vector<double> empirical_errors(const RadialKernel& k, const WeightedPointMeasure& sample,
                                     const Target& target, const std::vector<Norm>& norms);

// sqrt(Ck / n) + sqrt(2 Ck log(1/delta) / n).
double hoeffding_bound(double Ck, long n, double delta);

struct RateExperimentConfig {
  RadialKernel kernel;
  Target target;
  std::vector<int> n_grid;
  int replicates = 200;
  std::vector<Norm> norms{Norm::rkhs};
  std::uint64_t seed = 7;
  int jobs = 0;  // 0 = default_jobs(); never affects results
  int bootstrap_resamples = 1000;
};

void validate_rate_config(const RateExperimentConfig& config);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares y = intercept + slope * x; needs >= 2 distinct x.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct RateReport {
  Norm norm = Norm::rkhs;
  std::vector<int> n_grid;
  std::vector<std::vector<double>> errors;  // [n index][replicate]
  std::vector<double> mean_error;
  std::vector<double> median_error;
  // Absent when n_grid has a single entry.
  std::optional<double> slope;
  std::optional<double> intercept;
  std::optional<double> slope_ci_lo;
  std::optional<double> slope_ci_hi;
};

// Sample for (n, replicate) is keyed by (seed, n, replicate) and shared by all
// requested norms. One report per norm, in the order of config.norms.
std::vector<RateReport> run_rate_experiments(const RateExperimentConfig& config);
RateReport run_rate_experiment(const RateExperimentConfig& config);

struct CoverageReport {
  long n = 0;
  double delta = 0.0;
  double bound = 0.0;
  int replicates = 0;
  int exceedances = 0;
  double frequency = 0.0;
};

// Fraction of replicates whose RKHS error exceeds hoeffding_bound(C_k, n, delta).
CoverageReport coverage_experiment(const RadialKernel& k, const Target& target, int n, double delta,
                                   int replicates, std::uint64_t seed, int jobs = 0);

}  // namespace kme
