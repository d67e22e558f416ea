#pragma once

#include <cstddef>
#include <vector>

#include <flowmap/highd.hpp>
#include <flowmap/schedule.hpp>

namespace flowmap {

struct ShearOptions {
  int sign = 1;                   // +1 adds, -1 subtracts
  bool include_identity = false;  // also add sign * x_j
};

/**
 * @brief x_i += sign (G(x_j) - x_j), G the flow map of the 1D schedule g.
 *
 * A co-move stage drives x_i and x_j together (x_i - sign x_j is conserved),
 * then the inverse of g restores x_j alone. Other coordinates stay fixed.
 */
[[nodiscard]] Schedule shear_schedule(const Schedule& g, std::size_t i, std::size_t j, std::size_t n,
                                      const ShearOptions& opt = {});

/// Co-move part of shear_schedule only.
[[nodiscard]] Schedule comove_schedule(const Schedule& g, std::size_t i, std::size_t j, std::size_t n, int sign = 1);

/// Increasing flow maps P, Q with P(at_k) - Q(at_k) = d_k; at must be strictly increasing.
struct IncreasingPair {
  Schedule P{1};
  Schedule Q{1};
};
[[nodiscard]] IncreasingPair increasing_pair(const std::vector<double>& at, const std::vector<double>& d,
                                             double slack = 1e-3);

/// Every coordinate moved by the same exactly compiled approximation of h^alpha.
[[nodiscard]] Schedule tensor_contraction(const ShrinkSpec& spec, std::size_t n);

[[nodiscard]] Schedule tensor_separate(const std::vector<Point>& pts, double eps, SeparationTrace* trace = nullptr);

/// Requires coordinate-distinct xs.
[[nodiscard]] Schedule tensor_transport_separated(const std::vector<Point>& xs, const std::vector<Point>& ys,
                                                  double eps);

/// Separation when needed, then shear transport.
[[nodiscard]] Schedule tensor_transport(const std::vector<Point>& xs, const std::vector<Point>& ys, double eps);

}  // namespace flowmap
