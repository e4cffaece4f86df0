#include "jumpkit/errors.hpp"

#include <cstdio>

#include "jumpkit/vec.hpp"

namespace jumpkit {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidMeasure: return "InvalidMeasure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ZeroMomentum: return "ZeroMomentum";
    case ErrorCode::DenominatorNotPositive: return "DenominatorNotPositive";
    case ErrorCode::NoBracket: return "NoBracket";
    case ErrorCode::DegenerateMaximizer: return "DegenerateMaximizer";
    case ErrorCode::OutsideHull: return "OutsideHull";
    case ErrorCode::CflViolation: return "CflViolation";
    case ErrorCode::BoundViolation: return "BoundViolation";
    case ErrorCode::UnderflowRisk: return "UnderflowRisk";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

std::string format_vec(std::span<const double> a) {
  std::string out = "[";
  char buf[32];
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", a[i]);
    if (i) out += ", ";
    out += buf;
  }
  return out + "]";
}

}  // namespace jumpkit
