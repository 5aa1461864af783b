// Pairwise exponential sums over a point cloud. This is the only hot loop of
// the estimator experiments and is compiled with OpenMP SIMD enabled.
#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "kme/embedding.hpp"
#include "kme/errors.hpp"

// glibc ships vector variants of exp (libmvec) but only announces them under
// -ffast-math. Announcing them here lets the pair loop vectorize without
// relaxing IEEE semantics anywhere else.
#if defined(__x86_64__) && defined(__GLIBC__) && !defined(__FAST_MATH__) && !defined(__clang__)
extern "C" double exp(double) noexcept __attribute__((__simd__("notinbranch")));
#endif

namespace kme {

namespace {

// acc[p] += sum_{i<j} w_i w_j q_ij^(p+1), q_ij = exp(-base * |x_i - x_j|^2).
template <int L>
void ladder_pass(const WeightedPointMeasure& m, double base, double* acc) {
  const int n = m.size();
  const int d = m.dim();
  const double* w = m.weights.data();
  std::vector<double> r2(n > 0 ? n : 1);
  double t0 = 0.0, t1 = 0.0, t2 = 0.0, t3 = 0.0;
  for (int i = 0; i + 1 < n; ++i) {
    const int len = n - i - 1;
    double* r = r2.data();
    std::fill(r, r + len, 0.0);
    for (int k = 0; k < d; ++k) {
      const double* col = m.points.col(k).data() + i + 1;
      const double xi = m.points(i, k);
#pragma omp simd
      for (int j = 0; j < len; ++j) {
        const double diff = xi - col[j];
        r[j] += diff * diff;
      }
    }
    const double* wj = w + i + 1;
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
#pragma omp simd reduction(+ : a0, a1, a2, a3)
    for (int j = 0; j < len; ++j) {
      const double q = std::exp(-base * r[j]);
      const double wq = wj[j] * q;
      a0 += wq;
      if constexpr (L >= 2) a1 += wq * q;
      if constexpr (L >= 3) a2 += wq * q * q;
      if constexpr (L >= 4) a3 += wq * q * q * q;
    }
    t0 += w[i] * a0;
    t1 += w[i] * a1;
    t2 += w[i] * a2;
    t3 += w[i] * a3;
  }
  acc[0] += t0;
  if (L >= 2) acc[1] += t1;
  if (L >= 3) acc[2] += t2;
  if (L >= 4) acc[3] += t3;
}

void run_ladder(const WeightedPointMeasure& m, double base, int depth, double* acc) {
  switch (depth) {
    case 1: ladder_pass<1>(m, base, acc); break;
    case 2: ladder_pass<2>(m, base, acc); break;
    case 3: ladder_pass<3>(m, base, acc); break;
    default: ladder_pass<4>(m, base, acc); break;
  }
}

}  // namespace

std::vector<double> self_quadratic_forms(const WeightedPointMeasure& m, const std::vector<ExpSum>& profiles) {
  if (m.weights.size() != m.points.rows()) throw ArgumentError("point measure: weights and points differ in length");
  std::vector<double> rates;
  for (const auto& p : profiles) rates.insert(rates.end(), p.rates.begin(), p.rates.end());
  std::sort(rates.begin(), rates.end());
  rates.erase(std::unique(rates.begin(), rates.end()), rates.end());

  // Off-diagonal sums per distinct rate. Rates that are small integer
  // multiples of the smallest one share a single exponential per pair.
  std::map<double, double> pair_sum;
  if (!rates.empty()) {
    const double base = rates.front();
    int depth = 0;
    bool ladder = base > 0.0;
    for (double r : rates) {
      const double mult = r / base;
      const double rounded = std::round(mult);
      if (!(rounded >= 1.0 && rounded <= 4.0 && std::abs(mult - rounded) <= 1e-13 * mult)) {
        ladder = false;
        break;
      }
      depth = std::max(depth, static_cast<int>(rounded));
    }
    if (ladder) {
      double acc[4] = {0.0, 0.0, 0.0, 0.0};
      run_ladder(m, base, depth, acc);
      for (double r : rates) pair_sum[r] = acc[static_cast<int>(std::round(r / base)) - 1];
    } else {
      for (double r : rates) {
        double acc[4] = {0.0, 0.0, 0.0, 0.0};
        run_ladder(m, r, 1, acc);
        pair_sum[r] = acc[0];
      }
    }
  }

  const double diag = m.weights.squaredNorm();
  std::vector<double> out;
  out.reserve(profiles.size());
  for (const auto& p : profiles) {
    double total = 0.0;
    for (std::size_t a = 0; a < p.rates.size(); ++a) {
      total += p.weights[a] * (diag + 2.0 * pair_sum.at(p.rates[a]));
    }
    out.push_back(total);
  }
  return out;
}

}  // namespace kme
