#include "jumpkit/roots.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "jumpkit/errors.hpp"

namespace jumpkit {

RootResult safeguarded_newton(const std::function<ValueAndSlope(double)>& f, double lo, double hi,
                              double f_tol, int max_iterations) {
  ValueAndSlope flo = f(lo);
  ValueAndSlope fhi = f(hi);
  if (std::abs(flo.value) <= f_tol) return {lo, flo.value, 0, true};
  if (std::abs(fhi.value) <= f_tol) return {hi, fhi.value, 0, true};
  if ((flo.value > 0) == (fhi.value > 0))
    fail(ErrorCode::NoBracket, "safeguarded_newton: endpoints do not bracket a root");
  // Orient so that f(lo) < 0 < f(hi).
  if (flo.value > 0) {
    std::swap(lo, hi);
    std::swap(flo, fhi);
  }

  double x = std::abs(flo.value) < std::abs(fhi.value) ? lo : hi;
  ValueAndSlope fx = std::abs(flo.value) < std::abs(fhi.value) ? flo : fhi;
  double step_before_last = std::abs(hi - lo);
  double last_step = step_before_last;
  RootResult result;
  for (int it = 1; it <= max_iterations; ++it) {
    result.iterations = it;
    const double newton_x = fx.slope != 0.0 ? x - fx.value / fx.slope
                                            : std::numeric_limits<double>::quiet_NaN();
    const double a = std::min(lo, hi);
    const double b = std::max(lo, hi);
    const bool inside = std::isfinite(newton_x) && newton_x > a && newton_x < b;
    const bool slow = std::abs(2.0 * fx.value) > std::abs(step_before_last * fx.slope);
    step_before_last = last_step;
    double next;
    if (!inside || slow) {
      next = 0.5 * (lo + hi);
      last_step = 0.5 * std::abs(hi - lo);
    } else {
      next = newton_x;
      last_step = std::abs(next - x);
    }
    if (next == x) {
      result.x = x;
      result.f = fx.value;
      result.converged = true;
      return result;
    }
    x = next;
    fx = f(x);
    if (std::abs(fx.value) <= f_tol) {
      result.x = x;
      result.f = fx.value;
      result.converged = true;
      return result;
    }
    if (fx.value < 0)
      lo = x;
    else
      hi = x;
    if (std::abs(hi - lo) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(x)) {
      result.x = x;
      result.f = fx.value;
      result.converged = true;
      return result;
    }
  }
  result.x = x;
  result.f = fx.value;
  result.converged = false;
  return result;
}

RootResult bisect(const std::function<double(double)>& f, double lo, double hi, double x_tol,
                  int max_iterations) {
  double flo = f(lo);
  const double fhi = f(hi);
  if ((flo > 0) == (fhi > 0) && flo != 0.0 && fhi != 0.0)
    fail(ErrorCode::NoBracket, "bisect: endpoints do not bracket a root");
  RootResult result;
  for (int it = 1; it <= max_iterations && hi - lo > x_tol; ++it) {
    result.iterations = it;
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  result.x = 0.5 * (lo + hi);
  result.f = f(result.x);
  result.converged = hi - lo <= x_tol;
  return result;
}

MaximumResult golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                                 double x_tol, int max_iterations) {
  constexpr double kInvPhi = 0.6180339887498948482;
  double c = hi - kInvPhi * (hi - lo);
  double d = lo + kInvPhi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  MaximumResult result;
  for (int it = 1; it <= max_iterations && hi - lo > x_tol; ++it) {
    result.iterations = it;
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - kInvPhi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + kInvPhi * (hi - lo);
      fd = f(d);
    }
  }
  // Endpoints can win for monotone objectives.
  result.x = fc >= fd ? c : d;
  result.value = std::max(fc, fd);
  const double flo = f(lo);
  const double fhi = f(hi);
  if (flo > result.value) {
    result.x = lo;
    result.value = flo;
  }
  if (fhi > result.value) {
    result.x = hi;
    result.value = fhi;
  }
  return result;
}

}  // namespace jumpkit
