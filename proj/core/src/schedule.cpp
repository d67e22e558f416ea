#include <flowmap/schedule.hpp>

#include <cmath>

#include <flowmap/errors.hpp>

namespace flowmap {

Schedule::Schedule(std::size_t dim) : dim_(dim) {
  require(dim >= 1, ErrorKind::invalid_argument, "schedule dimension must be positive");
}

double Schedule::total_time() const {
  double t = 0.0;
  for (const auto& s : steps_) t += s.tau;
  return t;
}

Schedule& Schedule::append(VectorField field, double tau) {
  require(static_cast<bool>(field), ErrorKind::invalid_argument, "null field in schedule");
  require(field.dim() == dim_, ErrorKind::shape_mismatch,
          "field dimension " + std::to_string(field.dim()) + " does not match schedule dimension " +
              std::to_string(dim_));
  require(std::isfinite(tau) && tau >= 0.0, ErrorKind::invalid_argument,
          "step duration must be finite and nonnegative");
  steps_.push_back({std::move(field), tau});
  return *this;
}

Schedule& Schedule::append(const Schedule& later) {
  require(later.dim_ == dim_, ErrorKind::shape_mismatch, "schedule dimension mismatch");
  for (const auto& s : later.steps_) steps_.push_back(s);
  return *this;
}

Schedule Schedule::truncated(double t) const {
  Schedule out(dim_);
  double left = std::max(0.0, t);
  for (const auto& s : steps_) {
    if (left <= 0.0) break;
    const double tau = std::min(s.tau, left);
    out.steps_.push_back({s.field, tau});
    left -= tau;
  }
  return out;
}

}  // namespace flowmap
