#include "kme/quadrature.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "kme/errors.hpp"

namespace kme {

QuadratureResult& QuadratureResult::operator+=(const QuadratureResult& other) {
  value += other.value;
  error_estimate += other.error_estimate;
  panels += other.panels;
  converged = converged && other.converged;
  return *this;
}

namespace {

struct Panel {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel gauss_kronrod_panel(const ScalarFunction& f, double a, double b) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
  using G = boost::math::quadrature::gauss<double, 10>;
  const auto& xk = GK::abscissa();
  const auto& wk = GK::weights();
  const auto& wg = G::weights();
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);

  double f0 = f(c);
  double kronrod = f0 * wk[0];
  double gauss = 0.0;
  bool finite = std::isfinite(f0);
  for (std::size_t i = 1; i < xk.size(); ++i) {
    const double fp = f(c + h * xk[i]);
    const double fm = f(c - h * xk[i]);
    finite = finite && std::isfinite(fp) && std::isfinite(fm);
    kronrod += (fp + fm) * wk[i];
    if (i % 2 == 1) gauss += (fp + fm) * wg[i / 2];
  }
  Panel p{a, b, kronrod * h, std::abs((kronrod - gauss) * h)};
  if (!finite) {
    p.value = 0.0;
    p.error = std::numeric_limits<double>::infinity();
  }
  return p;
}

}  // namespace

QuadratureResult integrate_interval(const ScalarFunction& f, double a, double b,
                                    const QuadratureOptions& opts) {
  QuadratureResult out;
  if (!(a <= b)) throw ArgumentError("integrate_interval: requires a <= b");
  if (a == b) return out;

  std::priority_queue<Panel> heap;
  Panel first = gauss_kronrod_panel(f, a, b);
  double total = first.value;
  double total_err = first.error;
  heap.push(first);
  int panels = 1;
  // Panels too narrow to bisect are retired with their error kept in the sum.
  double frozen_value = 0.0;
  double frozen_err = 0.0;

  auto target = [&] { return std::max(opts.abs_tol, opts.rel_tol * std::abs(total)); };

  while (!(total_err <= target()) && !heap.empty() && panels < opts.max_panels) {
    Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      frozen_value += worst.value;
      frozen_err += worst.error;
      continue;
    }
    Panel left = gauss_kronrod_panel(f, worst.a, mid);
    Panel right = gauss_kronrod_panel(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++panels;
  }

  // Re-sum from the panels to shed accumulated cancellation in the running totals.
  double value = frozen_value;
  double err = frozen_err;
  while (!heap.empty()) {
    value += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = value;
  out.error_estimate = err;
  out.panels = panels;
  out.converged = std::isfinite(err) && err <= std::max(opts.abs_tol, opts.rel_tol * std::abs(value));
  return out;
}

QuadratureResult integrate_half_line(const ScalarFunction& f, double origin, double scale,
                                     int direction, const QuadratureOptions& opts) {
  if (!(scale > 0.0)) throw ArgumentError("integrate_half_line: scale must be positive");
  const double sign = direction >= 0 ? 1.0 : -1.0;
  auto mapped = [&](double s) {
    const double one_minus = 1.0 - s;
    const double u = origin + sign * scale * s / one_minus;
    const double jac = scale / (one_minus * one_minus);
    const double v = f(u);
    return v == 0.0 ? 0.0 : v * jac;
  };
  return integrate_interval(mapped, 0.0, 1.0, opts);
}

QuadratureResult integrate_real_line(const ScalarFunction& f, double center, double scale,
                                     const QuadratureOptions& opts) {
  QuadratureResult r = integrate_half_line(f, center, scale, +1, opts);
  r += integrate_half_line(f, center, scale, -1, opts);
  return r;
}

GaussHermiteRule gauss_hermite_rule(int order) {
  if (order < 1) throw ArgumentError("gauss_hermite_rule: order must be >= 1");
  // Golub-Welsch: eigen-decomposition of the symmetric Jacobi matrix.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double off = std::sqrt(0.5 * k);
    jacobi(k, k - 1) = off;
    jacobi(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  GaussHermiteRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const double mu0 = std::sqrt(M_PI);
  for (int i = 0; i < order; ++i) {
    rule.nodes[i] = solver.eigenvalues()(i);
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

}  // namespace kme
