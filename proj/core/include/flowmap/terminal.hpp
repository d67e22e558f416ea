#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <flowmap/json.hpp>
#include <flowmap/linalg.hpp>
#include <flowmap/schedule.hpp>
#include <flowmap/target.hpp>

namespace flowmap {

/// Affine read-out g(z) = W z + c from R^n to R^m.
struct TerminalMap {
  Matrix W;
  Point c;

  [[nodiscard]] static TerminalMap identity(std::size_t n);
  [[nodiscard]] std::size_t in_dim() const noexcept { return W.cols; }
  [[nodiscard]] std::size_t out_dim() const noexcept { return W.rows; }
  [[nodiscard]] Point operator()(std::span<const double> z) const;
  [[nodiscard]] double lipschitz_bound() const { return W.op_norm_bound(); }
  [[nodiscard]] bool full_row_rank(double tol = 1e-12) const;
  void validate() const;
};

[[nodiscard]] json terminal_to_json(const TerminalMap& g);
[[nodiscard]] TerminalMap terminal_from_json(const json& j);

/// Minimum-norm preimages; throws covering_violation when a value is off the range of g.
[[nodiscard]] std::vector<Point> lift_targets(const std::vector<Point>& values, const TerminalMap& g);

struct LpEstimate {
  double value = 0.0;
  double std_error = 0.0;  // delta-method standard error of the estimate
  std::size_t samples = 0;
};

/// Monte-Carlo ||F - g o flow||_{L^p(K)} with uniform samples on F's domain.
[[nodiscard]] LpEstimate compose_and_measure(const TerminalMap& g, const Schedule& s, const TargetSpec& F,
                                             double p, std::size_t samples, std::uint64_t seed);

/// Same with g = identity.
[[nodiscard]] LpEstimate lp_error_mc(const Schedule& s, const TargetSpec& F, double p, std::size_t samples,
                                     std::uint64_t seed);

}  // namespace flowmap
