#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flowmap {

enum class ErrorKind {
  invalid_argument,
  shape_mismatch,
  regime_violation,
  step_exhaustion,
  blow_up,
  integrator_failure,
  obstruction,
  infeasible,
  covering_violation,
  unsupported,
  io,
};

[[nodiscard]] constexpr std::string_view to_string(ErrorKind k) noexcept {
  switch (k) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::shape_mismatch: return "shape_mismatch";
    case ErrorKind::regime_violation: return "regime_violation";
    case ErrorKind::step_exhaustion: return "step_exhaustion";
    case ErrorKind::blow_up: return "blow_up";
    case ErrorKind::integrator_failure: return "integrator_failure";
    case ErrorKind::obstruction: return "obstruction";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::covering_violation: return "covering_violation";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class FlowmapError : public std::runtime_error {
 public:
  FlowmapError(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw FlowmapError(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace flowmap
