#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <flowmap/linalg.hpp>
#include <flowmap/schedule.hpp>

namespace flowmap {

enum class Method { rk4_fixed, rk45_adaptive, closed_form_if_available };

[[nodiscard]] std::string_view to_string(Method m) noexcept;
[[nodiscard]] Method method_from_string(std::string_view s);

struct IntegratorConfig {
  Method method = Method::closed_form_if_available;
  double rtol = 1e-10;
  double atol = 1e-12;
  double step = 1e-3;  // rk4_fixed step
  std::size_t max_steps = 2'000'000;
  double blowup = 1e12;

  void validate() const;
};

/// Flow of a single field for time tau.
[[nodiscard]] Point flow_step(const VectorField& f, double tau, Point x,
                              const IntegratorConfig& cfg = {});

/// z(T) for the schedule, integrating each step from the previous endpoint.
[[nodiscard]] Point flow_eval(const Schedule& s, Point x, const IntegratorConfig& cfg = {});

/// z(t) for 0 <= t <= total_time.
[[nodiscard]] Point flow_at_time(const Schedule& s, Point x, double t,
                                 const IntegratorConfig& cfg = {});

[[nodiscard]] std::vector<Point> flow_eval_batch(const Schedule& s, const std::vector<Point>& xs,
                                                 const IntegratorConfig& cfg = {});

/// Closed-form flow of dz/dt = v relu(w z + b).
[[nodiscard]] double flow_eval_exact_relu_1d(double v, double w, double b, double x, double tau);

enum class OrientationSign { positive, negative, indeterminate };

[[nodiscard]] std::string_view to_string(OrientationSign s) noexcept;

struct JacobianSample {
  Point point;
  double det = 0.0;
  OrientationSign sign = OrientationSign::indeterminate;

  [[nodiscard]] bool positive() const noexcept { return sign == OrientationSign::positive; }
};

/// Central-difference Jacobian of the flow map.
[[nodiscard]] Matrix flow_jacobian(const Schedule& s, const Point& x, double h,
                                   const IntegratorConfig& cfg = {});

[[nodiscard]] std::vector<JacobianSample> jacobian_sign_check(const Schedule& s,
                                                              const std::vector<Point>& points,
                                                              double h,
                                                              const IntegratorConfig& cfg = {},
                                                              double threshold = 1e-10);

}  // namespace flowmap
