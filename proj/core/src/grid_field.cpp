#include "jumpkit/grid_field.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

#include "jumpkit/errors.hpp"

namespace jumpkit {

namespace {

constexpr char kMagic[4] = {'G', 'F', 'L', 'D'};
constexpr std::uint32_t kVersion = 1;
constexpr const char* kCsvSchema = "# schema: jumpkit.grid_field/1";

template <class T>
T to_little(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    std::reverse(bytes, bytes + sizeof(T));
    std::memcpy(&value, bytes, sizeof(T));
  }
  return value;
}

template <class T>
void put(std::ostream& out, T value) {
  value = to_little(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) fail(ErrorCode::Io, "grid field: truncated binary stream");
  return to_little(value);
}

void put_doubles(std::ostream& out, std::span<const double> xs) {
  for (double x : xs) put(out, x);
}

std::vector<double> get_doubles(std::istream& in, std::uint64_t n) {
  std::vector<double> xs(n);
  for (auto& x : xs) x = get<double>(in);
  return xs;
}

double parse_number(std::string_view text) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last)
    fail(ErrorCode::Io, "grid field: bad number '" + std::string(text) + "'");
  return value;
}

// Axes are written ascending, so a new axis value is always the largest seen.
void push_distinct(std::vector<double>& axis, double value) {
  if (axis.empty() || value > axis.back()) axis.push_back(value);
}

}  // namespace

void GridField::validate() const {
  if (times.empty() || x.empty())
    fail(ErrorCode::InvalidArgument, "grid field: empty time or x axis");
  if (values.size() != nt() * slice_size())
    fail(ErrorCode::InvalidArgument, "grid field: value count does not match the axes");
}

std::vector<double> uniform_axis(double lo, double step, std::size_t n) {
  std::vector<double> axis(n);
  for (std::size_t i = 0; i < n; ++i) axis[i] = lo + static_cast<double>(i) * step;
  return axis;
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ec == std::errc{} ? ptr : buf);
}

void write_csv(const GridField& field, std::ostream& out, const std::string& y_name) {
  field.validate();
  out << kCsvSchema << '\n';
  out << (field.dims() == 1 ? "t,x,value\n" : "t,x," + y_name + ",value\n");
  for (std::size_t k = 0; k < field.nt(); ++k) {
    const std::string t = format_number(field.times[k]);
    for (std::size_t i = 0; i < field.nx(); ++i) {
      const std::string xi = format_number(field.x[i]);
      for (std::size_t j = 0; j < field.ny(); ++j) {
        out << t << ',' << xi << ',';
        if (field.dims() == 2) out << format_number(field.y[j]) << ',';
        out << format_number(field.at(k, i, j)) << '\n';
      }
    }
  }
}

GridField read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# schema: jumpkit.grid_field/", 0) != 0)
    fail(ErrorCode::Io, "grid field: missing schema line");
  if (!std::getline(in, line)) fail(ErrorCode::Io, "grid field: missing header");
  const int columns = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns != 3 && columns != 4) fail(ErrorCode::Io, "grid field: unexpected header " + line);

  GridField field;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(parse_number(std::string_view(line).substr(start, comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (static_cast<int>(cells.size()) != columns)
      fail(ErrorCode::Io, "grid field: wrong column count in '" + line + "'");
    push_distinct(field.times, cells[0]);
    push_distinct(field.x, cells[1]);
    if (columns == 4) push_distinct(field.y, cells[2]);
    field.values.push_back(cells.back());
  }
  field.validate();
  return field;
}

void write_binary(const GridField& field, std::ostream& out) {
  field.validate();
  out.write(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(field.dims()));
  put<std::uint64_t>(out, field.nt());
  put<std::uint64_t>(out, field.nx());
  put<std::uint64_t>(out, field.ny());
  put_doubles(out, field.times);
  put_doubles(out, field.x);
  if (field.dims() == 2) put_doubles(out, field.y);
  put_doubles(out, field.values);
  if (!out) fail(ErrorCode::Io, "grid field: write failed");
}

GridField read_binary(std::istream& in) {
  char magic[4];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0)
    fail(ErrorCode::Io, "grid field: bad magic");
  if (get<std::uint32_t>(in) != kVersion) fail(ErrorCode::Io, "grid field: unsupported version");
  const auto dims = get<std::uint32_t>(in);
  if (dims != 1 && dims != 2) fail(ErrorCode::Io, "grid field: bad dimension count");
  const auto nt = get<std::uint64_t>(in);
  const auto nx = get<std::uint64_t>(in);
  const auto ny = get<std::uint64_t>(in);
  if (dims == 1 && ny != 1) fail(ErrorCode::Io, "grid field: 1-D field with ny != 1");
  GridField field;
  field.times = get_doubles(in, nt);
  field.x = get_doubles(in, nx);
  if (dims == 2) field.y = get_doubles(in, ny);
  field.values = get_doubles(in, nt * nx * ny);
  field.validate();
  return field;
}

double sup_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorCode::InvalidArgument, "sup_distance: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace jumpkit
