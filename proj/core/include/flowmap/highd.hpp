#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <flowmap/json.hpp>
#include <flowmap/schedule.hpp>
#include <flowmap/target.hpp>
#include <flowmap/terminal.hpp>
#include <flowmap/well.hpp>

namespace flowmap {

/// Piecewise-constant approximation of F on the N^n cells of [0, 1]^n.
struct GridTarget {
  std::size_t n = 0;
  std::size_t N = 0;
  std::vector<Point> values;  // F at cell centers; coordinate 0 varies fastest
  double p = 1.0;
  double lp_error = 0.0;  // quadrature estimate of the L^p gap to F

  [[nodiscard]] std::size_t cells() const noexcept { return values.size(); }
  [[nodiscard]] Point corner(std::size_t cell) const;
  [[nodiscard]] std::size_t cell_of(std::span<const double> x) const;
  [[nodiscard]] double sup_norm() const;
};

[[nodiscard]] GridTarget make_grid_target(const TargetSpec& F, std::size_t N, double p,
                                          std::size_t quadrature_per_axis = 8);

/// Lower corners i/N of all cells, in GridTarget order.
[[nodiscard]] std::vector<Point> grid_corners(std::size_t n, std::size_t N);

struct ShrinkSpec {
  double alpha = 0.9;
  std::size_t N = 2;
  double eps1 = 1e-3;  // Euclidean tolerance on the shrunken cells
  void validate() const;
};

/// Continuous h^alpha: flat at i/N on [i/N, (i+alpha)/N], linear up to (i+1)/N after it.
[[nodiscard]] double h_alpha(double alpha, std::size_t N, double x);

/// Nodes used to build the contraction: breakpoints of h^alpha with each flat part lifted by `ramp`.
[[nodiscard]] PiecewiseLinear contraction_nodes(const ShrinkSpec& spec, double ramp);

/// 1D well obtained by moving only coordinate k of an n-dimensional well.
[[nodiscard]] WellFunction coordinate_slice_well(const WellFunction& well, std::size_t k);

/// nD schedule moving coordinate k by a 1D schedule built on coordinate_slice_well(well, k).
[[nodiscard]] Schedule lift_slice_schedule(const Schedule& s1d, const WellFunction& well, std::size_t k);

[[nodiscard]] Schedule build_contraction(const ShrinkSpec& spec, const WellFunction& well);

/// Pairs of points that agree in some coordinate (within tol), summed over coordinates.
[[nodiscard]] std::size_t collision_count(const std::vector<Point>& pts, double tol = 1e-10);
[[nodiscard]] std::size_t collision_count(const std::vector<Point>& pts, std::size_t coord, double tol = 1e-10);

struct SeparationTrace {
  std::vector<std::size_t> collisions;  // before the first stage, then after each stage
  std::vector<std::size_t> driven;      // coordinate moved by each stage
  double max_displacement = 0.0;
};

/// x_coord += rate * (x_control - kink) for every point above the kink.
struct ShearMove {
  std::size_t coord = 0;
  std::size_t control = 1;
  double kink = 0.0;
  double rate = 0.0;
};

/// Realizes a shear move as a schedule for the given points (all above the kink).
using ShearRealizer = std::function<Schedule(const ShearMove&, const std::vector<Point>&)>;

[[nodiscard]] Schedule separate_with(const std::vector<Point>& pts, double eps, const ShearRealizer& realize,
                                     SeparationTrace* trace = nullptr, double tol = 1e-10);

[[nodiscard]] Schedule separate_points(const std::vector<Point>& pts, const WellFunction& well, double eps,
                                       SeparationTrace* trace = nullptr);

/// Coordinate 0 of ys spread to a minimum gap; each point moves by less than eps / 2.
[[nodiscard]] std::vector<Point> distinct_leading_coordinate(const std::vector<Point>& ys, double eps);

struct TransportTrace {
  std::vector<Point> targets;  // ys after the leading-coordinate spread
  std::size_t stages = 0;
};

/// Requires coordinate-distinct xs; coordinate i is steered by coordinate (i + 1) mod n.
[[nodiscard]] Schedule transport_points(const std::vector<Point>& xs, const std::vector<Point>& ys,
                                        const WellFunction& well, double eps, TransportTrace* trace = nullptr);

enum class Backend { well, tensor };
[[nodiscard]] std::string_view to_string(Backend b) noexcept;
[[nodiscard]] Backend backend_from_string(std::string_view s);

struct LpOptions {
  std::size_t grid_N = 0;  // 0: smallest N meeting the grid budget
  std::size_t max_N = 6;
  Backend backend = Backend::well;
  std::optional<TerminalMap> terminal;
  std::size_t mc_samples = 100000;
  std::uint64_t seed = 1;
  std::size_t quadrature_per_axis = 8;
  std::optional<double> alpha;  // replaces the default max(leakage bound, 0.9)
};

struct StageCounts {
  std::size_t contraction = 0;
  std::size_t separation = 0;
  std::size_t transport = 0;
  [[nodiscard]] std::size_t total() const noexcept { return contraction + separation + transport; }
};

struct Report {
  std::size_t n = 0;
  double p = 1.0;
  double eps = 0.0;
  std::size_t N = 0;
  double alpha = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;
  double total_time_T = 0.0;
  StageCounts stages;
  double measured_lp_error = 0.0;
  double wall_time = 0.0;
  // budget terms behind the choices above
  std::string backend;
  double grid_error = 0.0;
  double omega_psi = 0.0;
  double leak_diameter = 0.0;
  double mc_std_error = 0.0;
  std::size_t mc_samples = 0;
};

[[nodiscard]] json report_to_json(const Report& r, bool with_wall_time = true);

struct LpResult {
  Schedule schedule;
  Report report;
};

/// Flow whose L^p distance to F on [0, 1]^n (through the terminal map, if any) is at most eps.
[[nodiscard]] LpResult approximate_lp(const TargetSpec& F, double eps, double p, const WellFunction& well,
                                      const LpOptions& opt = {});

}  // namespace flowmap
