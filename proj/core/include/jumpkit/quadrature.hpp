#pragma once

#include <functional>
#include <vector>

namespace jumpkit {

// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

QuadratureRule gauss_legendre(int order);

// The same rule affinely mapped to [a, b].
QuadratureRule gauss_legendre(int order, double a, double b);

template <class F>
double integrate(const QuadratureRule& rule, F&& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) s += rule.weights[i] * f(rule.nodes[i]);
  return s;
}

struct AdaptiveResult {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
  bool converged = true;
};

// Globally adaptive 7/15-point Gauss-Kronrod on [a, b]: the panel with the
// largest error estimate is bisected until the summed estimate falls below
// max(abs_tol, rel_tol * |value|).
AdaptiveResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                  double abs_tol = 1e-14, double rel_tol = 1e-13,
                                  int max_panels = 2000);

}  // namespace jumpkit
