#pragma once

#include <functional>
#include <vector>

namespace kme {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int panels = 0;
  bool converged = true;

  QuadratureResult& operator+=(const QuadratureResult& other);
};

struct QuadratureOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  int max_panels = 4000;
};

using ScalarFunction = std::function<double(double)>;

// Globally adaptive 21-point Gauss-Kronrod on [a, b]. The error estimate is the
// raw |K21 - G10| difference summed over panels; converged implies
// error_estimate <= max(abs_tol, rel_tol * |value|).
QuadratureResult integrate_interval(const ScalarFunction& f, double a, double b,
                                    const QuadratureOptions& opts = {});

// Integral of f over [origin, +inf) (direction > 0) or (-inf, origin]
// (direction < 0) via u = origin +- scale * s / (1 - s), s in [0, 1).
QuadratureResult integrate_half_line(const ScalarFunction& f, double origin, double scale,
                                     int direction, const QuadratureOptions& opts = {});

// Integral over the whole real line, split at `center`.
QuadratureResult integrate_real_line(const ScalarFunction& f, double center, double scale,
                                     const QuadratureOptions& opts = {});

// Nodes and weights for int e^{-x^2} f(x) dx (physicists' Hermite).
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussHermiteRule gauss_hermite_rule(int order);

}  // namespace kme
