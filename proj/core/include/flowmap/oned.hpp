#pragma once

#include <cstddef>
#include <vector>

#include <flowmap/integrator.hpp>
#include <flowmap/schedule.hpp>
#include <flowmap/target.hpp>
#include <flowmap/well.hpp>

namespace flowmap {

struct Transport {
  int sign = 1;  // drive with sign * well.field
  double tau = 0.0;
};

/// Drive direction and time carrying from_x to to_x; both must lie on the same side of the zero box.
[[nodiscard]] Transport transport_time(const WellFunction& well, double from_x, double to_x,
                                       double tol = 1e-12, const IntegratorConfig& cfg = {});

struct PointMatchProblem {
  std::vector<double> xs;  // strictly increasing
  std::vector<double> ys;  // strictly increasing
  WellFunction well;       // 1D
  double eps = 1e-6;
  void validate() const;
};

/// Per induction stage: index matched and the largest drift of earlier points.
struct MatchTrace {
  std::vector<std::size_t> matched;
  std::vector<double> drift;
};

/**
 * @brief Schedule mapping xs[k] to ys[k] for every k.
 *
 * Points are matched in increasing order. Earlier points are parked in a
 * guard interval Q left of all data by the flow of a second well on Q',
 * the new point is driven on the far side of Q, then the parking flow is
 * undone.
 */
[[nodiscard]] Schedule match_points(const PointMatchProblem& p, MatchTrace* trace = nullptr,
                                    const IntegratorConfig& cfg = {});

/// omega(r) from a grid of `fine` intervals on the target domain.
[[nodiscard]] double estimate_modulus(const TargetSpec& phi, double r, std::size_t fine);

struct ApproxIncreasing {
  Schedule schedule{1};
  std::vector<double> nodes;
  double mesh = 0.0;       // |Delta|
  double omega = 0.0;      // estimated omega_phi(|Delta|)
  double point_tol = 0.0;  // tolerance passed to match_points
  double ramp = 0.0;       // slope added when node values are flat
};

struct ApproxOptions {
  std::size_t initial_intervals = 8;
  std::size_t max_intervals = 1u << 14;
  std::size_t probe_points = 4096;  // increasing check
};

/// Uniform-mesh interpolation of an increasing target; sup error <= omega(|Delta|) + point tolerance.
[[nodiscard]] ApproxIncreasing approx_increasing(const TargetSpec& phi, double eps, const WellFunction& well,
                                                 const ApproxOptions& opt = {}, const IntegratorConfig& cfg = {});

/// max |flow(x) - phi(x)| over `points` uniform points of the domain.
[[nodiscard]] double sup_error_1d(const Schedule& s, const TargetSpec& phi, std::size_t points,
                                  const IntegratorConfig& cfg = {});

/// Strict increase of the flow map on a uniform grid of [a, b].
[[nodiscard]] bool increasing_on_grid(const Schedule& s, double a, double b, std::size_t points,
                                      const IntegratorConfig& cfg = {});

}  // namespace flowmap
