#pragma once

#include <functional>

namespace jumpkit {

struct RootResult {
  double x = 0.0;
  double f = 0.0;  // residual at x
  int iterations = 0;
  bool converged = false;
};

// f(x) returns {value, derivative}. Requires a bracket with f(lo) and f(hi)
// of opposite signs. Newton steps that leave the bracket or fail to halve it
// fall back to bisection. Stops when |f| <= f_tol or the bracket collapses.
struct ValueAndSlope {
  double value;
  double slope;
};

RootResult safeguarded_newton(const std::function<ValueAndSlope(double)>& f, double lo, double hi,
                              double f_tol, int max_iterations = 200);

// Plain bisection on a sign change of f; stops when hi - lo <= x_tol.
RootResult bisect(const std::function<double(double)>& f, double lo, double hi, double x_tol,
                  int max_iterations = 400);

struct MaximumResult {
  double x = 0.0;
  double value = 0.0;
  int iterations = 0;
};

// Golden-section maximization of a unimodal function on [lo, hi].
MaximumResult golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                                 double x_tol, int max_iterations = 200);

}  // namespace jumpkit
