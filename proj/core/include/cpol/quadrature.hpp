#pragma once

#include <functional>
#include <vector>

namespace cpol {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Nodes and weights for an n-point rule, computed once and cached.
const GaussLegendreRule& gauss_legendre(int n);

/// Integrate f over [a, b] with an n-point Gauss-Legendre rule.
/// Fixed node set and summation order, so results are bit-reproducible.
double integrate(const std::function<double(double)>& f, double a, double b, int n);

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

/// Integrate with n and 2n nodes; the difference serves as the error estimate.
/// Throws QuadratureError if the estimate exceeds tol (absolute, scaled by the
/// integrand magnitude).
QuadratureResult integrate_checked(const std::function<double(double)>& f, double a, double b,
                                   int n, double tol);

}  // namespace cpol
