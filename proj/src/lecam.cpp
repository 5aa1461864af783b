#include "kme/lecam.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>

#include "kme/errors.hpp"
#include "kme/parallel.hpp"
#include "kme/rng.hpp"

namespace kme {

namespace {

// Relative slack for the floating-point certificate of exact lattice geometry.
constexpr double kGeomSlack = 1e-12;
constexpr long kMaxFullPacking = 20000;
// The two-point constructions meet the separation with equality in exact
// arithmetic; comparisons allow this much relative rounding.
constexpr double kSeparationSlack = 1e-12;

long int_pow(long base, int exp) {
  long out = 1;
  for (int i = 0; i < exp; ++i) {
    if (out > (1L << 40) / std::max(1L, base)) return -1;  // overflow guard
    out *= base;
  }
  return out;
}

// The inscribed-cube grid separates points by 2R/((N-1) sqrt d), which is at
// least R/N exactly when sqrt d <= 2N/(N-1).
bool use_cube_grid(int d, int N) { return std::sqrt(static_cast<double>(d)) <= 2.0 * N / (N - 1.0); }

void check_packing_args(int d, double radius, int N) {
  if (d < 1) throw ArgumentError("pack_ball: d must be >= 1");
  if (N < 3) throw ArgumentError("pack_ball: N must be >= 3");
  if (!(std::isfinite(radius) && radius > 0.0)) throw ArgumentError("pack_ball: radius must be finite and > 0");
}

Eigen::MatrixXd cube_grid(int d, double radius, int N) {
  const long count = int_pow(N, d);
  const double h = 2.0 * radius / ((N - 1.0) * std::sqrt(static_cast<double>(d)));
  const double start = -0.5 * (N - 1) * h;
  Eigen::MatrixXd pts(count, d);
  std::vector<int> idx(d, 0);
  for (long r = 0; r < count; ++r) {
    for (int j = 0; j < d; ++j) pts(r, j) = start + idx[j] * h;
    for (int j = d - 1; j >= 0; --j) {
      if (++idx[j] < N) break;
      idx[j] = 0;
    }
  }
  return pts;
}

// Integer vectors with squared norm <= level, in lexicographic order.
void lattice_shell(int d, long level, std::vector<int>& cur, long used, std::vector<std::vector<int>>& out) {
  const int j = static_cast<int>(cur.size());
  if (j == d) {
    out.push_back(cur);
    return;
  }
  const int m = static_cast<int>(std::floor(std::sqrt(static_cast<double>(level - used))));
  for (int v = -m; v <= m; ++v) {
    if (used + static_cast<long>(v) * v > level) continue;
    cur.push_back(v);
    lattice_shell(d, level, cur, used + static_cast<long>(v) * v, out);
    cur.pop_back();
  }
}

// Points of (R/N) Z^d in the ball, sorted by norm then lexicographically;
// returns at most `cap` of them (cap < 0 means all).
Eigen::MatrixXd scaled_lattice(int d, double radius, int N, long cap) {
  const long max_level = static_cast<long>(N) * N;
  std::vector<std::vector<int>> vecs;
  long level = 0;
  for (;; ++level) {
    vecs.clear();
    std::vector<int> cur;
    lattice_shell(d, level, cur, 0, vecs);
    if (level >= max_level || (cap >= 0 && static_cast<long>(vecs.size()) >= cap)) break;
  }
  auto norm2 = [](const std::vector<int>& v) {
    long s = 0;
    for (int x : v) s += static_cast<long>(x) * x;
    return s;
  };
  std::stable_sort(vecs.begin(), vecs.end(), [&](const auto& a, const auto& b) { return norm2(a) < norm2(b); });
  const long count = cap < 0 ? static_cast<long>(vecs.size()) : std::min<long>(cap, vecs.size());
  Eigen::MatrixXd pts(count, d);
  const double h = radius / N;
  for (long r = 0; r < count; ++r) {
    for (int j = 0; j < d; ++j) pts(r, j) = vecs[r][j] * h;
  }
  return pts;
}

void certify(const Eigen::MatrixXd& pts, double radius, int N, long required, const char* op) {
  if (pts.rows() < required) {
    throw ConstructionError(std::string(op) + ": only " + std::to_string(pts.rows()) + " points, need " +
                            std::to_string(required));
  }
  const PackingCheck c = scan_packing(pts);
  if (c.max_norm > radius * (1.0 + kGeomSlack)) {
    throw ConstructionError(std::string(op) + ": a point lies outside the ball");
  }
  if (pts.rows() > 1 && c.min_distance < radius / N * (1.0 - kGeomSlack)) {
    throw ConstructionError(std::string(op) + ": separation below radius / N");
  }
}

Eigen::MatrixXd smallest_norm_rows(const Eigen::MatrixXd& pts, long cap) {
  std::vector<long> order(pts.rows());
  std::iota(order.begin(), order.end(), 0L);
  const Eigen::VectorXd norms = pts.rowwise().squaredNorm();
  std::stable_sort(order.begin(), order.end(), [&](long a, long b) { return norms(a) < norms(b); });
  const long count = std::min<long>(cap, pts.rows());
  Eigen::MatrixXd out(count, pts.cols());
  for (long r = 0; r < count; ++r) out.row(r) = pts.row(order[r]);
  return out;
}

}  // namespace

double lecam_two(double alpha) {
  if (!(std::isfinite(alpha) && alpha > 0.0)) throw ArgumentError("lecam_two: alpha must be finite and > 0");
  return std::max(0.25 * std::exp(-alpha), 0.5 * (1.0 - std::sqrt(alpha / 2.0)));
}

double lecam_many(long M, double alpha) {
  if (M < 2) throw ArgumentError("lecam_many: M must be >= 2");
  if (!(alpha > 0.0 && alpha <= 0.125)) throw ArgumentError("lecam_many: alpha must lie in (0, 1/8]");
  const double sm = std::sqrt(static_cast<double>(M));
  return sm / (1.0 + sm) * (1.0 - 2.0 * alpha - std::sqrt(2.0 * alpha / std::log(static_cast<double>(M))));
}

double kl_gauss_iso(const Eigen::VectorXd& mu0, const Eigen::VectorXd& mu1, double sigma2, long n) {
  if (mu0.size() != mu1.size()) throw ArgumentError("kl_gauss_iso: dimension mismatch");
  if (!(std::isfinite(sigma2) && sigma2 > 0.0)) throw ArgumentError("kl_gauss_iso: sigma2 must be > 0");
  if (n < 1) throw ArgumentError("kl_gauss_iso: n must be >= 1");
  return static_cast<double>(n) * (mu0 - mu1).squaredNorm() / (2.0 * sigma2);
}

TwoPointKL kl_two_point_bound(double p0, double p1, long n) {
  if (!(p0 > 0.0 && p0 < 1.0 && p1 > 0.0 && p1 < 1.0)) {
    throw ArgumentError("kl_two_point_bound: p0 and p1 must lie in (0, 1)");
  }
  if (n < 1) throw ArgumentError("kl_two_point_bound: n must be >= 1");
  TwoPointKL out;
  const double dp = p0 - p1;
  out.bound = n * dp * dp / (p1 * (1.0 - p1));
  out.exact = n * (p0 * std::log(p0 / p1) + (1.0 - p0) * std::log1p(-p0) - (1.0 - p0) * std::log1p(-p1));
  return out;
}

PackingCheck scan_packing(const Eigen::MatrixXd& points) {
  PackingCheck c;
  c.min_distance = std::numeric_limits<double>::infinity();
  const long m = points.rows();
  for (long i = 0; i < m; ++i) {
    c.max_norm = std::max(c.max_norm, points.row(i).norm());
    for (long j = i + 1; j < m; ++j) c.min_distance = std::min(c.min_distance, (points.row(i) - points.row(j)).norm());
  }
  return c;
}

Eigen::MatrixXd pack_ball(int d, double radius, int N) {
  check_packing_args(d, radius, N);
  const long required = int_pow(N, d);
  if (required < 0 || required > kMaxFullPacking) {
    throw ArgumentError("pack_ball: N^d exceeds " + std::to_string(kMaxFullPacking) + "; use pack_ball_capped");
  }
  Eigen::MatrixXd pts = use_cube_grid(d, N) ? cube_grid(d, radius, N) : scaled_lattice(d, radius, N, -1);
  certify(pts, radius, N, required, "pack_ball");
  return pts;
}

Eigen::MatrixXd pack_ball_capped(int d, double radius, int N, int cap) {
  check_packing_args(d, radius, N);
  if (cap < 2) throw ArgumentError("pack_ball_capped: cap must be >= 2");
  const long full = int_pow(N, d);
  const long required = full < 0 ? cap : std::min<long>(cap, full);
  Eigen::MatrixXd pts;
  if (use_cube_grid(d, N) && full >= 0 && full <= 1000000) {
    pts = smallest_norm_rows(cube_grid(d, radius, N), required);
  } else {
    pts = scaled_lattice(d, radius, N, required);
  }
  certify(pts, radius, N, required, "pack_ball_capped");
  return pts;
}

HardFamily build_hard_family_thm8(const RadialKernel& k, long n, Norm norm, int cap) {
  if (n < 1) throw ArgumentError("build_hard_family_thm8: n must be >= 1");
  const HardFamilyConstants h = hard_family_constants(k, n, norm);
  HardFamily f;
  f.theorem = norm == Norm::rkhs ? "thm8" : "thm13";
  f.norm = norm;
  f.kernel = k;
  f.n = n;
  f.sigma2 = h.sigma2;
  f.c_nu = h.c_nu;
  f.N = h.N;
  f.s = h.theorem_s;
  f.construction_s = h.construction_s;
  f.alpha = 0.125;
  f.packing_radius = std::sqrt(h.c_nu / n);
  f.points = pack_ball_capped(k.d, f.packing_radius, h.N, cap);
  f.M = f.points.rows() - 1;
  f.t_upper = norm == Norm::rkhs ? bk_for(k).hi : ak_for(k).hi;
  f.probability_floor = 0.2;
  for (long r = 0; r < f.points.rows(); ++r) {
    f.hypotheses.emplace_back(IsotropicGaussian{f.points.row(r).transpose(), h.sigma2});
  }
  return f;
}

HardFamily build_two_point_family(const RadialKernel& k, long n, Norm norm) {
  if (n < 1) throw ArgumentError("build_two_point_family: n must be >= 1");
  HardFamily f;
  f.norm = norm;
  f.kernel = k;
  f.n = n;
  double z2 = 0.0;
  if (norm == Norm::rkhs) {
    const ZBeta zb = find_z_beta(k);
    z2 = zb.z_norm2;
    f.theorem = "thm1";
    f.s = *bound_thm1(zb.beta, n).s;
  } else {
    const BoundReport c10 = bound_cor10(k, n);
    if (!c10.s) throw PreconditionError("build_two_point_family: psi must be square integrable for the L2 family");
    z2 = c10.constant("z_norm2");
    f.theorem = "thm9";
    f.s = *bound_thm9(k, z2, n).s;
  }
  f.construction_s = f.s;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(k.d);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(k.d);
  v(0) = std::sqrt(z2);
  const double p0 = 0.5 + 1.0 / (3.0 * std::sqrt(static_cast<double>(n)));
  f.hypotheses.emplace_back(TwoPointDiscrete{x, v, p0});
  f.hypotheses.emplace_back(TwoPointDiscrete{x, v, 0.5});
  f.alpha = 4.0 / 9.0;
  f.M = 1;
  f.probability_floor = 0.25;
  f.points.resize(2, k.d);
  f.points.row(0) = x.transpose();
  f.points.row(1) = v.transpose();
  return f;
}

bool ConditionReport::all_pass() const {
  return separation_ok && construction_separation_ok && kl_ok && closeness_ok && e1_ok.value_or(true);
}

namespace {

ConditionReport verify_two_point(const HardFamily& f) {
  const auto& h0 = std::get<TwoPointDiscrete>(f.hypotheses.at(0));
  const auto& h1 = std::get<TwoPointDiscrete>(f.hypotheses.at(1));
  ConditionReport r;
  const double d2 = f.norm == Norm::rkhs ? rkhs_discrete_dist2(f.kernel, h0, h1) : l2_discrete_dist2(f.kernel, h0, h1);
  r.min_pairwise_distance = std::sqrt(d2);
  r.required_separation = 2.0 * f.s;
  r.construction_separation = 2.0 * f.construction_s;
  const TwoPointKL kl = kl_two_point_bound(h0.p, h1.p, f.n);
  r.mean_kl = kl.exact;
  r.max_pairwise_kl = std::max(kl.exact, kl_two_point_bound(h1.p, h0.p, f.n).exact);
  r.kl_budget = f.alpha;
  r.floor_value = lecam_two(f.alpha);
  r.separation_ok = r.min_pairwise_distance >= r.required_separation * (1.0 - kSeparationSlack);
  r.construction_separation_ok = r.min_pairwise_distance >= r.construction_separation * (1.0 - kSeparationSlack);
  r.kl_ok = kl.exact <= r.kl_budget && kl.bound <= r.kl_budget * (1.0 + 1e-12);
  r.closeness_ok = true;
  return r;
}

}  // namespace

ConditionReport verify_hard_family(const HardFamily& f, bool check_e1, int jobs) {
  if (f.hypotheses.size() < 2) throw ArgumentError("verify_hard_family: needs at least two hypotheses");
  if (std::holds_alternative<TwoPointDiscrete>(f.hypotheses.front())) return verify_two_point(f);

  const long m = static_cast<long>(f.hypotheses.size());
  std::vector<Eigen::VectorXd> mu(m);
  for (long i = 0; i < m; ++i) {
    const auto& g = std::get<IsotropicGaussian>(f.hypotheses[i]);
    if (g.sigma2 != f.sigma2) throw ArgumentError("verify_hard_family: hypotheses must share sigma2");
    mu[i] = g.mu;
  }
  std::vector<double> pair_r2;
  pair_r2.reserve(m * (m - 1) / 2);
  for (long i = 0; i < m; ++i) {
    for (long j = i + 1; j < m; ++j) pair_r2.push_back((mu[i] - mu[j]).squaredNorm());
  }

  // Distances depend on |mu_i - mu_j|^2 only; lattice families repeat few values.
  std::vector<double> distinct = pair_r2;
  std::sort(distinct.begin(), distinct.end());
  std::vector<double> keys;
  for (double v : distinct) {
    if (keys.empty() || v > keys.back() * (1.0 + 1e-13)) keys.push_back(v);
  }
  std::vector<double> dist2(keys.size());
  parallel_for(keys.size(), jobs, [&](std::size_t i) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(f.kernel.d);
    a(0) = std::sqrt(keys[i]);
    dist2[i] = gauss_dist2(f.kernel, f.norm, IsotropicGaussian{Eigen::VectorXd::Zero(f.kernel.d), f.sigma2},
                           IsotropicGaussian{a, f.sigma2});
  });
  auto lookup = [&](double v) {
    auto it = std::lower_bound(keys.begin(), keys.end(), v / (1.0 + 1e-13));
    return dist2[static_cast<std::size_t>(it - keys.begin())];
  };

  ConditionReport r;
  r.min_pairwise_distance = std::numeric_limits<double>::infinity();
  double max_r2 = 0.0;
  for (double v : pair_r2) {
    r.min_pairwise_distance = std::min(r.min_pairwise_distance, std::sqrt(lookup(v)));
    max_r2 = std::max(max_r2, v);
  }
  r.required_separation = 2.0 * f.s;
  r.construction_separation = 2.0 * f.construction_s;
  r.separation_ok = r.min_pairwise_distance >= r.required_separation * (1.0 - kSeparationSlack);
  r.construction_separation_ok = r.min_pairwise_distance >= r.construction_separation * (1.0 - kSeparationSlack);

  double kl_sum = 0.0;
  for (long j = 1; j < m; ++j) kl_sum += kl_gauss_iso(mu[j], mu[0], f.sigma2, f.n);
  r.mean_kl = kl_sum / static_cast<double>(m - 1);
  r.max_pairwise_kl = static_cast<double>(f.n) * max_r2 / (2.0 * f.sigma2);
  r.kl_budget = f.alpha * std::log(static_cast<double>(f.M));
  r.kl_ok = r.mean_kl <= r.kl_budget;
  r.floor_value = f.M >= 2 ? lecam_many(f.M, f.alpha) : lecam_two(f.alpha);

  const double t = f.t_upper;
  r.max_closeness = t * max_r2;
  r.closeness_limit = f.norm == Norm::rkhs ? 1.0 + 4.0 * t * f.sigma2 : 4.0 * t * f.sigma2 + 2.0;
  r.closeness_ok = r.max_closeness <= r.closeness_limit;

  if (check_e1 && f.norm == Norm::rkhs) {
    const int d = f.kernel.d;
    double margin = 0.0;
    if (d > 2) {
      const IntervalConstant bk = bk_for(f.kernel);
      const double Z = f.kernel.nu.total_mass();
      const double rhs = 2.0 / 3.0 * bk.hi * f.sigma2 +
                         bk.beta * bk.lo * std::exp(1.0) / (24.0 * bk.hi * Z) * (d - 2.0) * (d - 2.0) /
                             (static_cast<double>(d) * (d + 2.0));
      margin = bk.hi * max_r2 - rhs;
    } else {
      margin = max_r2 - f.sigma2;
    }
    r.max_e1_margin = margin;
    r.e1_ok = margin <= 0.0;
  }
  return r;
}

StressSummary minimax_stress(const std::string& estimator, const HardFamily& f, int replicates, std::uint64_t seed,
                             int jobs) {
  if (estimator != "empirical" && estimator != "zero") {
    throw ArgumentError("minimax_stress: estimator must be 'empirical' or 'zero'");
  }
  if (replicates < 1) throw ArgumentError("minimax_stress: replicates must be >= 1");
  if (f.hypotheses.empty()) throw ArgumentError("minimax_stress: empty family");
  const std::size_t h = f.hypotheses.size();
  StressSummary out;
  out.estimator = estimator;
  out.replicates = replicates;
  out.s = f.s;
  out.probability_floor = f.probability_floor;
  out.exceedance.assign(h, 0.0);

  if (estimator == "zero") {
    // The zero function misses every embedding by its norm; no sampling involved.
    for (std::size_t j = 0; j < h; ++j) {
      double norm2 = 0.0;
      if (const auto* g = std::get_if<IsotropicGaussian>(&f.hypotheses[j])) {
        norm2 = gauss_inner(f.kernel, f.norm, *g, *g);
      } else {
        const WeightedPointMeasure w = as_weighted(std::get<TwoPointDiscrete>(f.hypotheses[j]));
        norm2 = self_quadratic_form(f.kernel, f.norm, w);
      }
      out.exceedance[j] = std::sqrt(std::max(0.0, norm2)) >= f.s ? 1.0 : 0.0;
    }
  } else {
    std::vector<std::atomic<int>> hits(h);
    for (auto& x : hits) x = 0;
    parallel_for(h * static_cast<std::size_t>(replicates), jobs, [&](std::size_t task) {
      const std::size_t j = task / replicates;
      const std::size_t rep = task % replicates;
      auto engine = keyed_engine(seed, {0x73747265ULL, j, rep});
      const WeightedPointMeasure sample = sample_target(f.hypotheses[j], static_cast<int>(f.n), engine);
      if (empirical_error(f.kernel, sample, f.hypotheses[j], f.norm) >= f.s) ++hits[j];
    });
    for (std::size_t j = 0; j < h; ++j) out.exceedance[j] = static_cast<double>(hits[j]) / replicates;
  }
  const auto worst = std::max_element(out.exceedance.begin(), out.exceedance.end());
  out.worst_case = *worst;
  out.worst_hypothesis = static_cast<int>(worst - out.exceedance.begin());
  return out;
}

}  // namespace kme
