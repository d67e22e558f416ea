#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <flowmap/linalg.hpp>
#include <flowmap/well.hpp>

namespace flowmap {

/// Continuous piecewise-linear 1D data: values ys at strictly increasing xs.
struct PiecewiseLinear {
  std::vector<double> xs;
  std::vector<double> ys;
  [[nodiscard]] double operator()(double x) const;
  [[nodiscard]] std::vector<double> slopes() const;
  void validate() const;
};

/// Target F: K -> R^m on a box K.
struct TargetSpec {
  std::string name;
  Box domain;
  std::size_t out_dim = 1;
  std::function<void(std::span<const double>, std::span<double>)> fn;
  bool increasing = false;           // declared for 1D targets
  std::optional<PiecewiseLinear> pwl;  // exact description when available
  double lipschitz = 0.0;            // 0 when unknown

  [[nodiscard]] std::size_t in_dim() const noexcept { return domain.dim(); }
  [[nodiscard]] Point operator()(std::span<const double> x) const;
  [[nodiscard]] Point operator()(std::initializer_list<double> x) const {
    return (*this)(std::span<const double>(x.begin(), x.size()));
  }
  [[nodiscard]] double scalar(double x) const;
};

[[nodiscard]] TargetSpec pwl_target(std::string name, PiecewiseLinear data);

/// Increasing 1D target on [0, 1] from log-slopes u on equal pieces, starting at y0.
[[nodiscard]] TargetSpec pwl_from_log_slopes(std::string name, const std::vector<double>& u, double y0 = 0.0);

[[nodiscard]] std::vector<std::string> builtin_target_names(std::size_t n);
[[nodiscard]] TargetSpec builtin_target(const std::string& name, std::size_t n = 1);

/**
 * @brief Samples table. With n = 1 and one output column the target is the
 * monotone cubic (PCHIP) interpolant; otherwise nearest sample.
 */
[[nodiscard]] TargetSpec target_from_csv(const std::string& path, std::size_t n);

/// "builtin:NAME", "NAME", "csv:PATH" or a path ending in .csv.
[[nodiscard]] TargetSpec resolve_target(const std::string& spec, std::size_t n);

}  // namespace flowmap
