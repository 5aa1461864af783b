#include "kme/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kme/errors.hpp"
#include "kme/parallel.hpp"
#include "kme/rng.hpp"

namespace kme {

namespace {

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double hi = v[mid];
  const double lo = *std::max_element(v.begin(), v.begin() + mid);
  return 0.5 * (lo + hi);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Type-7 empirical quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

LineFit fit_log_means(const std::vector<int>& n_grid, const std::vector<double>& means) {
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    x.push_back(std::log(static_cast<double>(n_grid[i])));
    y.push_back(std::log(means[i]));
  }
  return fit_line(x, y);
}

}  // namespace

void validate_target(const Target& target, int d) {
  if (const auto* g = std::get_if<IsotropicGaussian>(&target)) {
    if (g->mu.size() != d) throw ArgumentError("target mean dimension does not match d");
    if (!(g->sigma2 > 0.0) || !std::isfinite(g->sigma2)) throw ArgumentError("target sigma2 must be > 0");
    return;
  }
  const auto& p = std::get<TwoPointDiscrete>(target);
  if (p.x.size() != d || p.v.size() != d) throw ArgumentError("target atoms must have dimension d");
  if (!(p.p > 0.0 && p.p < 1.0)) throw ArgumentError("target weight p must lie in (0, 1)");
  if (p.x == p.v) throw ArgumentError("target atoms must be distinct");
}

WeightedPointMeasure sample_target(const Target& target, int n, std::mt19937_64& engine) {
  if (n < 1) throw ArgumentError("sample_target: n must be >= 1");
  Eigen::MatrixXd points;
  if (const auto* g = std::get_if<IsotropicGaussian>(&target)) {
    const int d = static_cast<int>(g->mu.size());
    validate_target(target, d);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sd = std::sqrt(g->sigma2);
    points.resize(n, d);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < d; ++k) points(i, k) = g->mu(k) + sd * normal(engine);
    }
  } else {
    const auto& p = std::get<TwoPointDiscrete>(target);
    const int d = static_cast<int>(p.x.size());
    validate_target(target, d);
    std::bernoulli_distribution coin(p.p);
    points.resize(n, d);
    for (int i = 0; i < n; ++i) points.row(i) = coin(engine) ? p.x.transpose() : p.v.transpose();
  }
  return uniform_measure(std::move(points));
}

WeightedPointMeasure sample_target(const Target& target, int n, std::uint64_t seed) {
  auto engine = keyed_engine(seed, {static_cast<std::uint64_t>(n)});
  return sample_target(target, n, engine);
}

std::vector<double> empirical_errors(const RadialKernel& k, const WeightedPointMeasure& sample,
                                     const Target& target, const std::vector<Norm>& norms) {
  validate_target(target, k.d);
  std::vector<double> dist2;
  if (const auto* g = std::get_if<IsotropicGaussian>(&target)) {
    dist2 = empirical_vs_gauss_norms(k, norms, sample, *g);
  } else {
    const WeightedPointMeasure atoms = as_weighted(std::get<TwoPointDiscrete>(target));
    for (Norm norm : norms) dist2.push_back(weighted_dist2(k, norm, sample, atoms));
  }
  for (double& v : dist2) v = std::sqrt(v);
  return dist2;
}

double empirical_error(const RadialKernel& k, const WeightedPointMeasure& sample, const Target& target,
                       Norm norm) {
  return empirical_errors(k, sample, target, {norm})[0];
}

double hoeffding_bound(double Ck, long n, double delta) {
  if (!(Ck > 0.0) || !std::isfinite(Ck)) throw ArgumentError("hoeffding_bound: Ck must be > 0");
  if (n < 1) throw ArgumentError("hoeffding_bound: n must be >= 1");
  if (!(delta > 0.0 && delta <= 1.0)) throw ArgumentError("hoeffding_bound: delta must lie in (0, 1]");
  const double nn = static_cast<double>(n);
  return std::sqrt(Ck / nn) + std::sqrt(2.0 * Ck * std::log(1.0 / delta) / nn);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ArgumentError("fit_line: needs >= 2 paired points");
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw ArgumentError("fit_line: x values must not all coincide");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

void validate_rate_config(const RateExperimentConfig& config) {
  config.kernel.nu.validate();
  validate_target(config.target, config.kernel.d);
  if (config.n_grid.empty()) throw ArgumentError("rate experiment: n_grid must not be empty");
  for (std::size_t i = 0; i < config.n_grid.size(); ++i) {
    if (config.n_grid[i] < 2) throw ArgumentError("rate experiment: every n must be >= 2");
    if (i > 0 && config.n_grid[i] <= config.n_grid[i - 1]) {
      throw ArgumentError("rate experiment: n_grid must be strictly increasing");
    }
  }
  if (config.replicates < 1) throw ArgumentError("rate experiment: replicates must be >= 1");
  if (config.norms.empty()) throw ArgumentError("rate experiment: at least one norm is required");
  if (config.bootstrap_resamples < 2) throw ArgumentError("rate experiment: bootstrap needs >= 2 resamples");
}

std::vector<RateReport> run_rate_experiments(const RateExperimentConfig& config) {
  validate_rate_config(config);
  const std::size_t grid = config.n_grid.size();
  const std::size_t reps = static_cast<std::size_t>(config.replicates);
  const std::size_t norms = config.norms.size();
  // errors[norm][n][rep]
  std::vector<std::vector<std::vector<double>>> errors(
      norms, std::vector<std::vector<double>>(grid, std::vector<double>(reps, 0.0)));

  // Largest n first so the expensive tasks do not trail at the end.
  parallel_for(grid * reps, config.jobs, [&](std::size_t task) {
    const std::size_t ni = grid - 1 - task / reps;
    const std::size_t rep = task % reps;
    const int n = config.n_grid[ni];
    try {
      auto engine = keyed_engine(config.seed, {static_cast<std::uint64_t>(n), rep});
      const WeightedPointMeasure sample = sample_target(config.target, n, engine);
      const std::vector<double> e = empirical_errors(config.kernel, sample, config.target, config.norms);
      for (std::size_t a = 0; a < norms; ++a) errors[a][ni][rep] = e[a];
    } catch (const std::exception& ex) {
      std::ostringstream msg;
      msg << "rate experiment failed at n=" << n << ", replicate=" << rep << ": " << ex.what();
      throw IntegrationError(msg.str(), 0.0, 0.0);
    }
  });

  std::vector<RateReport> reports;
  for (std::size_t a = 0; a < norms; ++a) {
    RateReport r;
    r.norm = config.norms[a];
    r.n_grid = config.n_grid;
    r.errors = errors[a];
    for (const auto& row : r.errors) {
      r.mean_error.push_back(mean_of(row));
      r.median_error.push_back(median_of(row));
    }
    if (grid >= 2) {
      const LineFit fit = fit_log_means(r.n_grid, r.mean_error);
      r.slope = fit.slope;
      r.intercept = fit.intercept;
      // Basic bootstrap: resample replicates within each n.
      std::vector<double> boot(static_cast<std::size_t>(config.bootstrap_resamples));
      for (std::size_t b = 0; b < boot.size(); ++b) {
        auto engine = keyed_engine(config.seed, {0x626f6f74ULL, a, b});
        std::uniform_int_distribution<std::size_t> pick(0, reps - 1);
        std::vector<double> means(grid);
        for (std::size_t ni = 0; ni < grid; ++ni) {
          double s = 0.0;
          for (std::size_t j = 0; j < reps; ++j) s += r.errors[ni][pick(engine)];
          means[ni] = s / static_cast<double>(reps);
        }
        boot[b] = fit_log_means(r.n_grid, means).slope;
      }
      std::sort(boot.begin(), boot.end());
      double lo = 2.0 * fit.slope - quantile_sorted(boot, 0.975);
      double hi = 2.0 * fit.slope - quantile_sorted(boot, 0.025);
      // A skewed bootstrap law can push the basic interval off the estimate.
      lo = std::min(lo, fit.slope);
      hi = std::max(hi, fit.slope);
      r.slope_ci_lo = lo;
      r.slope_ci_hi = hi;
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

RateReport run_rate_experiment(const RateExperimentConfig& config) {
  if (config.norms.size() != 1) throw ArgumentError("run_rate_experiment: exactly one norm expected");
  return run_rate_experiments(config).front();
}

CoverageReport coverage_experiment(const RadialKernel& k, const Target& target, int n, double delta,
                                   int replicates, std::uint64_t seed, int jobs) {
  if (replicates < 1) throw ArgumentError("coverage_experiment: replicates must be >= 1");
  CoverageReport out;
  out.n = n;
  out.delta = delta;
  out.replicates = replicates;
  out.bound = hoeffding_bound(kernel_constants(k).C_k_rkhs, n, delta);
  std::vector<char> exceeded(static_cast<std::size_t>(replicates), 0);
  parallel_for(exceeded.size(), jobs, [&](std::size_t rep) {
    auto engine = keyed_engine(seed, {static_cast<std::uint64_t>(n), rep});
    const WeightedPointMeasure sample = sample_target(target, n, engine);
    exceeded[rep] = empirical_error(k, sample, target, Norm::rkhs) > out.bound ? 1 : 0;
  });
  for (char e : exceeded) out.exceedances += e;
  out.frequency = static_cast<double>(out.exceedances) / replicates;
  return out;
}

}  // namespace kme
