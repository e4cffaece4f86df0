#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace jumpkit {

// Scalar field sampled at a list of times on a uniform 1-D or 2-D grid.
// values are row-major over (time, x, y); a 1-D field has an empty y axis.
struct GridField {
  std::vector<double> times;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> values;

  int dims() const noexcept { return y.empty() ? 1 : 2; }
  std::size_t nt() const noexcept { return times.size(); }
  std::size_t nx() const noexcept { return x.size(); }
  std::size_t ny() const noexcept { return y.empty() ? 1 : y.size(); }
  std::size_t slice_size() const noexcept { return nx() * ny(); }

  double& at(std::size_t k, std::size_t i, std::size_t j = 0) {
    return values[(k * nx() + i) * ny() + j];
  }
  double at(std::size_t k, std::size_t i, std::size_t j = 0) const {
    return values[(k * nx() + i) * ny() + j];
  }

  std::span<const double> slice(std::size_t k) const {
    return {values.data() + k * slice_size(), slice_size()};
  }
  std::span<double> slice(std::size_t k) {
    return {values.data() + k * slice_size(), slice_size()};
  }

  // Throws InvalidArgument when the sizes disagree.
  void validate() const;
};

// Uniform axis of n points starting at lo with spacing step.
std::vector<double> uniform_axis(double lo, double step, std::size_t n);

// CSV with a schema line, a header and one row per sample:
//   t,x,value  or  t,x,y,value
void write_csv(const GridField& field, std::ostream& out, const std::string& y_name = "y");
GridField read_csv(std::istream& in);

// Binary layout, all integers and floats little-endian:
//   char[4] "GFLD", u32 version (1), u32 dims,
//   u64 nt, u64 nx, u64 ny (1 for a 1-D field),
//   f64 times[nt], f64 x[nx], f64 y[ny] (only when dims == 2),
//   f64 values[nt * nx * ny] row-major over (t, x, y).
void write_binary(const GridField& field, std::ostream& out);
GridField read_binary(std::istream& in);

// Largest |a - b| over two fields on the same grid and times.
double sup_distance(std::span<const double> a, std::span<const double> b);

// Shortest decimal text that reads back to the same double.
std::string format_number(double value);

}  // namespace jumpkit
