#pragma once

#include <cstdint>
#include <vector>

#include <flowmap/schedule.hpp>

namespace flowmap {

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;
  [[nodiscard]] double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// Best rational approximation with denominator <= max_den (continued fractions).
[[nodiscard]] Rational rationalize(double x, std::int64_t max_den = 64);

/// Alternates f and g N times with steps t/(2N); approximates the flow of (f + g)/2 for time t.
[[nodiscard]] Schedule average_flow_schedule(const VectorField& f, const VectorField& g, double t, int N);

/**
 * @brief Splits each of N periods of length t/N into Q slots, Q the common
 * denominator of the weights, and hands slots to fields round-robin.
 *
 * Consecutive slots of the same field are merged into one step.
 */
[[nodiscard]] Schedule convex_combo_schedule(const std::vector<VectorField>& fields,
                                             const std::vector<Rational>& weights, double t, int N,
                                             std::int64_t max_denominator = 64);

/// Real weights are rationalized first; the last weight absorbs the rounding.
[[nodiscard]] Schedule convex_combo_schedule(const std::vector<VectorField>& fields,
                                             const std::vector<double>& weights, double t, int N,
                                             std::int64_t max_denominator = 64);

}  // namespace flowmap
