#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "jumpkit/hamiltonian.hpp"
#include "jumpkit/hj_solver.hpp"
#include "jumpkit/measure.hpp"

namespace jumpkit::cli {

using Json = nlohmann::json;

// A malformed or out-of-range configuration. field is the dotted path of the
// offending entry; line is set for JSON syntax errors.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message, std::optional<std::size_t> line = {})
      : std::runtime_error(message), field_(std::move(field)), line_(line) {}

  const std::string& field() const noexcept { return field_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  std::string field_;
  std::optional<std::size_t> line_;
};

Json load_config(const std::filesystem::path& path);

// Reads one JSON object, remembering which keys were consumed so that
// finish() can reject anything left over.
class ObjectReader {
 public:
  ObjectReader(const Json& value, std::string path);

  bool has(const std::string& key) const;
  std::string field(const std::string& key) const;

  const Json& raw(const std::string& key);
  ObjectReader object(const std::string& key);

  double number(const std::string& key);
  double number(const std::string& key, double fallback);
  double positive(const std::string& key);
  double positive(const std::string& key, double fallback);
  std::int64_t integer(const std::string& key, std::int64_t lo, std::int64_t hi);
  std::int64_t integer(const std::string& key, std::int64_t fallback, std::int64_t lo,
                       std::int64_t hi);
  bool boolean(const std::string& key, bool fallback);
  std::string string(const std::string& key);
  std::string string(const std::string& key, const std::string& fallback);
  Vec vector(const std::string& key);
  std::vector<double> numbers(const std::string& key);
  std::vector<Vec> vectors(const std::string& key);

  void finish() const;
  const std::string& path() const noexcept { return path_; }

 private:
  const Json& value_;
  std::string path_;
  std::set<std::string> used_;
};

// Measure section: kind plus the fields of that kind (see README).
VelocityMeasure parse_measure(ObjectReader reader);

// Solver tolerance overrides; omitted entries keep the library defaults.
SolverTolerances parse_tolerances(ObjectReader reader);
LegendreOptions parse_legendre_options(ObjectReader reader);

// Named initial potential families.
struct PotentialSpec {
  Potential function;
  int dimension = 1;
};
PotentialSpec parse_potential(ObjectReader reader, int dimension);

// Uniform grid over [lower, upper) per axis; with include_upper the last
// point is upper itself.
struct GridSpec {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::int64_t> cells;

  std::vector<double> axis(std::size_t k, bool include_upper) const;
};
GridSpec parse_grid(ObjectReader reader);

std::vector<double> parse_times(ObjectReader& reader, const std::string& key, double T);

}  // namespace jumpkit::cli
