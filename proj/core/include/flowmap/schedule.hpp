#pragma once

#include <cstddef>
#include <vector>

#include <flowmap/vector_field.hpp>

namespace flowmap {

struct Step {
  VectorField field;
  double tau = 0.0;
};

/// Piecewise-constant control: steps are applied in order, first step first.
class Schedule {
 public:
  explicit Schedule(std::size_t dim = 1);

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] const std::vector<Step>& steps() const noexcept { return steps_; }
  [[nodiscard]] std::size_t size() const noexcept { return steps_.size(); }
  [[nodiscard]] bool empty() const noexcept { return steps_.empty(); }
  [[nodiscard]] double total_time() const;

  Schedule& append(VectorField field, double tau);
  /// Appends every step of `later`; the result flows this schedule, then `later`.
  Schedule& append(const Schedule& later);

  /// Schedule realizing the flow up to time t (clamped to [0, total_time]).
  [[nodiscard]] Schedule truncated(double t) const;

 private:
  std::size_t dim_;
  std::vector<Step> steps_;
};

}  // namespace flowmap
