#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace jumpkit {

// Velocities and momenta share one representation; the dimension is a
// property of the measure, not of the type.
using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(std::span<const double> a) {
  double s = 0.0;
  for (double x : a) s += x * x;
  return std::sqrt(s);
}

inline bool is_zero(std::span<const double> a) {
  for (double x : a)
    if (x != 0.0) return false;
  return true;
}

inline bool all_finite(std::span<const double> a) {
  for (double x : a)
    if (!std::isfinite(x)) return false;
  return true;
}

inline Vec scaled(std::span<const double> a, double s) {
  Vec out(a.begin(), a.end());
  for (double& x : out) x *= s;
  return out;
}

std::string format_vec(std::span<const double> a);

}  // namespace jumpkit
