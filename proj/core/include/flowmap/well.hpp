#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <flowmap/families.hpp>

namespace flowmap {

struct Box {
  Point lo;
  Point hi;

  [[nodiscard]] std::size_t dim() const noexcept { return lo.size(); }
  [[nodiscard]] bool contains(std::span<const double> x, double tol = 0.0) const;
  [[nodiscard]] Point center() const;
  [[nodiscard]] double volume() const;
};

/**
 * @brief Field vanishing on a closed box and sign-definite outside it.
 *
 * outside_sign(c, i, side) records the sign of component c when probing
 * coordinate i below (side 0) or above (side 1) the box.
 */
struct WellFunction {
  std::size_t dim = 1;
  VectorField field;
  Box zero_box;
  std::vector<int> signs;  // dim x dim x 2
  double zero_tolerance = 1e-9;
  double certified_slack = 0.0;
  std::string kind;

  [[nodiscard]] int outside_sign(std::size_t component, std::size_t coord, int side) const {
    return signs[(component * dim + coord) * 2 + static_cast<std::size_t>(side)];
  }
  [[nodiscard]] double width(std::size_t coord = 0) const { return zero_box.hi[coord] - zero_box.lo[coord]; }
};

/// h = 1/2 [relu(q1 - x) + relu(x - q2)]
[[nodiscard]] WellFunction relu_well_1d(double q1, double q2);

/// Every component equals 1/(2n) sum_j [relu(-1 - z_j) + relu(z_j - 1)].
[[nodiscard]] WellFunction relu_well_nd(std::size_t n);

/// Every component equals (1/n) sum_j sigmoid_smn(M, N, z_j); approximate zero set [-1, 1]^n.
[[nodiscard]] WellFunction sigmoid_well(int M, int N, std::size_t n);

/// Components (1/n) sum_j s(a sigma(z_j) + b) with a, b mapping [i_lo, i_hi] onto [-1, 1].
[[nodiscard]] WellFunction block_well(Activation sigma, double i_lo, double i_hi, std::size_t n);

/// sign * h(x - shift): the zero box moves by +shift.
[[nodiscard]] WellFunction shifted_well(const WellFunction& w, const Point& shift, int sign = 1);

struct WellCertificate {
  bool passed = false;
  double max_inside = 0.0;          // largest |h| seen inside the zero box
  double min_outside_margin = 0.0;  // smallest sign-corrected component outside
  std::size_t samples = 0;
  std::string detail;
};

/// Dense sampling along every coordinate line through the box center.
[[nodiscard]] WellCertificate certify_well(const WellFunction& w, std::size_t samples_per_line = 100000,
                                           double extent = 2.0);

}  // namespace flowmap
