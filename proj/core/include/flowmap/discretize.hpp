#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <flowmap/integrator.hpp>
#include <flowmap/json.hpp>
#include <flowmap/schedule.hpp>

namespace flowmap {

/// One residual update z <- z + delta * f(z).
struct ResNetLayer {
  VectorField field;
  double delta = 0.0;
  std::size_t step = 0;  // index of the schedule step it discretizes
};

struct ResNetExport {
  static constexpr int format_version = 1;

  std::size_t dim = 1;
  std::vector<ResNetLayer> layers;
  double source_T = 0.0;

  [[nodiscard]] std::size_t S() const noexcept { return layers.size(); }
  [[nodiscard]] std::vector<double> delta_list() const;
  [[nodiscard]] Point forward(Point z) const;
  [[nodiscard]] std::vector<Point> forward_batch(const std::vector<Point>& zs) const;
};

/// Layers per step by largest remainder of S * tau_i / T, at least one each.
[[nodiscard]] std::vector<std::size_t> allocate_layers(const Schedule& s, std::size_t S);

[[nodiscard]] ResNetExport euler_discretize(const Schedule& s, std::size_t S);

/**
 * @brief {"format", "version", "dim", "delta_list", "layers": [{"tag", "params"}],
 * "meta": {"source_T", "S", "steps"}}. Layers hold the field only; the step
 * size lives in delta_list.
 */
[[nodiscard]] json resnet_to_json(const ResNetExport& r);
[[nodiscard]] ResNetExport resnet_from_json(const json& j);

struct SlopeReport {
  std::vector<std::size_t> S_list;
  std::vector<double> errors;  // sup over the probes of |network - flow|
  double slope = 0.0;
  bool degenerate = false;     // every error below the noise floor
  bool monotone = true;        // errors non-increasing in S
};

/// Least-squares slope of log y against log x.
[[nodiscard]] double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Uniform grid with `per_axis` points per axis on [lo, hi]^dim.
[[nodiscard]] std::vector<Point> probe_grid(std::size_t dim, std::size_t per_axis, double lo = 0.0,
                                            double hi = 1.0);

[[nodiscard]] SlopeReport truncation_slope(const Schedule& s, const std::vector<std::size_t>& S_list,
                                           const std::vector<Point>& probes, const IntegratorConfig& cfg = {});

[[nodiscard]] json slope_report_to_json(const SlopeReport& r);

}  // namespace flowmap
