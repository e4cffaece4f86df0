#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace jumpkit {

enum class ErrorCode {
  InvalidMeasure,
  InvalidArgument,
  ZeroMomentum,
  DenominatorNotPositive,
  NoBracket,
  DegenerateMaximizer,
  OutsideHull,
  CflViolation,
  BoundViolation,
  UnderflowRisk,
  Unsupported,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries a machine-readable code; the
// CLI maps these to exit statuses and to its JSON error record.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace jumpkit
