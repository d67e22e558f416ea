#include <flowmap/integrator.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include <flowmap/errors.hpp>
#include <flowmap/parallel.hpp>

namespace flowmap {

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::rk4_fixed: return "rk4_fixed";
    case Method::rk45_adaptive: return "rk45_adaptive";
    case Method::closed_form_if_available: return "closed_form_if_available";
  }
  return "unknown";
}

Method method_from_string(std::string_view s) {
  if (s == "rk4_fixed") return Method::rk4_fixed;
  if (s == "rk45_adaptive") return Method::rk45_adaptive;
  if (s == "closed_form_if_available") return Method::closed_form_if_available;
  fail(ErrorKind::invalid_argument, "unknown integrator method '" + std::string(s) + "'");
}

std::string_view to_string(OrientationSign s) noexcept {
  switch (s) {
    case OrientationSign::positive: return "positive";
    case OrientationSign::negative: return "negative";
    case OrientationSign::indeterminate: return "indeterminate";
  }
  return "unknown";
}

void IntegratorConfig::validate() const {
  require(rtol > 0.0 && atol > 0.0, ErrorKind::invalid_argument, "integrator tolerances must be positive");
  require(step > 0.0, ErrorKind::invalid_argument, "integrator step must be positive");
  require(max_steps >= 1, ErrorKind::invalid_argument, "max_steps must be at least 1");
  require(blowup > 0.0, ErrorKind::invalid_argument, "blow-up threshold must be positive");
}

namespace {

void guard(const Point& z, const IntegratorConfig& cfg) {
  if (!all_finite(z)) fail(ErrorKind::blow_up, "non-finite state during integration");
  if (norm_inf(z) > cfg.blowup) fail(ErrorKind::blow_up, "state exceeded blow-up threshold");
}

Point rk4_fixed(const VectorField& f, double tau, Point z, const IntegratorConfig& cfg) {
  const auto n_steps = static_cast<std::size_t>(std::ceil(tau / cfg.step));
  if (n_steps > cfg.max_steps) fail(ErrorKind::step_exhaustion, "rk4_fixed: step budget exhausted");
  if (n_steps == 0) return z;
  const double h = tau / static_cast<double>(n_steps);
  const std::size_t n = z.size();
  Point k1(n), k2(n), k3(n), k4(n), tmp(n);
  for (std::size_t s = 0; s < n_steps; ++s) {
    f.eval(z, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = z[i] + 0.5 * h * k1[i];
    f.eval(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = z[i] + 0.5 * h * k2[i];
    f.eval(tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = z[i] + h * k3[i];
    f.eval(tmp, k4);
    for (std::size_t i = 0; i < n; ++i) z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    guard(z, cfg);
  }
  return z;
}

// Dormand-Prince 5(4)
Point rk45(const VectorField& f, double tau, Point z, const IntegratorConfig& cfg) {
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const std::size_t n = z.size();
  std::array<Point, 7> k;
  for (auto& v : k) v.assign(n, 0.0);
  Point tmp(n), y5(n);
  double t = 0.0;
  double h = std::min(tau, 1e-2);
  std::size_t attempts = 0;
  f.eval(z, k[0]);
  while (t < tau) {
    if (++attempts > cfg.max_steps) fail(ErrorKind::step_exhaustion, "rk45: step budget exhausted");
    const bool last = t + h >= tau;
    if (last) h = tau - t;
    for (std::size_t i = 0; i < n; ++i) tmp[i] = z[i] + h * a21 * k[0][i];
    f.eval(tmp, k[1]);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = z[i] + h * (a31 * k[0][i] + a32 * k[1][i]);
    f.eval(tmp, k[2]);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = z[i] + h * (a41 * k[0][i] + a42 * k[1][i] + a43 * k[2][i]);
    f.eval(tmp, k[3]);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = z[i] + h * (a51 * k[0][i] + a52 * k[1][i] + a53 * k[2][i] + a54 * k[3][i]);
    f.eval(tmp, k[4]);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = z[i] + h * (a61 * k[0][i] + a62 * k[1][i] + a63 * k[2][i] + a64 * k[3][i] + a65 * k[4][i]);
    f.eval(tmp, k[5]);
    for (std::size_t i = 0; i < n; ++i)
      y5[i] = z[i] + h * (b1 * k[0][i] + b3 * k[2][i] + b4 * k[3][i] + b5 * k[4][i] + b6 * k[5][i]);
    f.eval(y5, k[6]);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = h * (e1 * k[0][i] + e3 * k[2][i] + e4 * k[3][i] + e5 * k[4][i] + e6 * k[5][i] +
                            e7 * k[6][i]);
      const double sc = cfg.atol + cfg.rtol * std::max(std::abs(z[i]), std::abs(y5[i]));
      err = std::max(err, std::abs(e) / sc);
    }
    if (!std::isfinite(err)) fail(ErrorKind::blow_up, "non-finite state during integration");
    if (err <= 1.0) {
      t = last ? tau : t + h;
      z = y5;
      k[0] = k[6];
      guard(z, cfg);
    }
    const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    h *= factor;
    if (t < tau && h < 1e-15 * std::max(1.0, tau))
      fail(ErrorKind::integrator_failure, "rk45: step size underflow");
  }
  return z;
}

Point structured_step(const VectorField& f, double tau, const Point& x, const IntegratorConfig& cfg,
                      bool& ok) {
  using Role = FlowPlan::Role;
  const FlowPlan& plan = f.plan();
  const FieldImpl& impl = f.impl();
  const std::size_t n = x.size();
  Point out = x;
  Point vel;
  auto slice_at = [&](std::size_t k, std::size_t along) {
    Point base = x;
    base[along] = 0.0;
    Point dir(n, 0.0);
    dir[along] = 1.0;
    return impl.slice(k, base, dir);
  };
  std::vector<std::optional<PiecewiseAffine>> leader_slice(n);
  for (std::size_t k = 0; k < n; ++k) {
    switch (plan.role[k]) {
      case Role::still: break;
      case Role::constant:
        if (vel.empty()) vel = f(x);
        out[k] = x[k] + tau * vel[k];
        break;
      case Role::self: {
        leader_slice[k] = plan.cached[k] ? *plan.cached[k] : slice_at(k, k);
        out[k] = leader_slice[k]->flow(x[k], tau);
        break;
      }
      case Role::follower: break;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (plan.role[k] != Role::follower) continue;
    const std::size_t l = plan.leader[k];
    const PiecewiseAffine pk = slice_at(k, l);
    const auto ratio = pk.proportional_to(*leader_slice[l]);
    if (!ratio) {
      ok = false;
      return x;
    }
    out[k] = x[k] + *ratio * (out[l] - x[l]);
  }
  guard(out, cfg);
  ok = true;
  return out;
}

}  // namespace

Point flow_step(const VectorField& f, double tau, Point x, const IntegratorConfig& cfg) {
  require(x.size() == f.dim(), ErrorKind::shape_mismatch, "point dimension mismatch");
  require(all_finite(x), ErrorKind::invalid_argument, "initial point must be finite");
  if (tau == 0.0) return x;
  switch (cfg.method) {
    case Method::rk4_fixed: return rk4_fixed(f, tau, std::move(x), cfg);
    case Method::rk45_adaptive: return rk45(f, tau, std::move(x), cfg);
    case Method::closed_form_if_available: break;
  }
  switch (f.plan().kind) {
    case FlowPlan::Kind::identity: return x;
    case FlowPlan::Kind::frozen: {
      const Point v = f(x);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += tau * v[i];
      guard(x, cfg);
      return x;
    }
    case FlowPlan::Kind::structured: {
      bool ok = false;
      Point y = structured_step(f, tau, x, cfg, ok);
      if (ok) return y;
      return rk45(f, tau, std::move(x), cfg);
    }
    case FlowPlan::Kind::numeric: return rk45(f, tau, std::move(x), cfg);
  }
  return x;
}

Point flow_eval(const Schedule& s, Point x, const IntegratorConfig& cfg) {
  cfg.validate();
  require(x.size() == s.dim(), ErrorKind::shape_mismatch, "point dimension mismatch");
  for (const auto& step : s.steps()) x = flow_step(step.field, step.tau, std::move(x), cfg);
  return x;
}

Point flow_at_time(const Schedule& s, Point x, double t, const IntegratorConfig& cfg) {
  return flow_eval(s.truncated(t), std::move(x), cfg);
}

std::vector<Point> flow_eval_batch(const Schedule& s, const std::vector<Point>& xs,
                                   const IntegratorConfig& cfg) {
  std::vector<Point> out(xs.size());
  parallel_for(xs.size(), [&](std::size_t i) { out[i] = flow_eval(s, xs[i], cfg); });
  return out;
}

double flow_eval_exact_relu_1d(double v, double w, double b, double x, double tau) {
  return PiecewiseAffine(0.0, 0.0, {{v, w, b}}).flow(x, tau);
}

Matrix flow_jacobian(const Schedule& s, const Point& x, double h, const IntegratorConfig& cfg) {
  require(h > 0.0, ErrorKind::invalid_argument, "finite-difference step must be positive");
  const std::size_t n = x.size();
  Matrix J(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    Point xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const Point fp = flow_eval(s, xp, cfg);
    const Point fm = flow_eval(s, xm, cfg);
    for (std::size_t i = 0; i < n; ++i) J(i, j) = (fp[i] - fm[i]) / (2.0 * h);
  }
  return J;
}

std::vector<JacobianSample> jacobian_sign_check(const Schedule& s, const std::vector<Point>& points,
                                                double h, const IntegratorConfig& cfg, double threshold) {
  std::vector<JacobianSample> out(points.size());
  parallel_for(points.size(), [&](std::size_t p) {
    const Matrix J = flow_jacobian(s, points[p], h, cfg);
    Eigen::MatrixXd m(J.rows, J.cols);
    for (std::size_t i = 0; i < J.rows; ++i)
      for (std::size_t j = 0; j < J.cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = J(i, j);
    const double det = m.determinant();
    OrientationSign sign = OrientationSign::indeterminate;
    if (det > threshold) sign = OrientationSign::positive;
    else if (det < -threshold) sign = OrientationSign::negative;
    out[p] = {points[p], det, sign};
  });
  return out;
}

}  // namespace flowmap
