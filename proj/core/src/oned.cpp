#include <flowmap/oned.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <flowmap/errors.hpp>

namespace flowmap {

namespace {

double flow1(const VectorField& f, double tau, double x, const IntegratorConfig& cfg) {
  return flow_step(f, tau, Point{x}, cfg)[0];
}

double eval1(const VectorField& f, double x) {
  double y = 0.0;
  f.eval(std::span<const double>(&x, 1), std::span<double>(&y, 1));
  return y;
}

/// Time for the flow of f from x to reach target; f must push x monotonically toward it.
double hitting_time(const VectorField& f, double x, double target, double tol, const IntegratorConfig& cfg) {
  if (x == target) return 0.0;
  const FieldImpl& impl = f.impl();
  if (cfg.method == Method::closed_form_if_available && impl.has_slices()) {
    const double zero = 0.0, one = 1.0;
    const PiecewiseAffine p = impl.slice(0, std::span<const double>(&zero, 1), std::span<const double>(&one, 1));
    const auto t = p.hitting_time(x, target);
    require(t.has_value(), ErrorKind::infeasible, "target is not reachable by the drive");
    return *t;
  }
  const double dir = target > x ? 1.0 : -1.0;
  auto passed = [&](double z) { return dir * (z - target) >= 0.0; };
  const double speed = std::abs(eval1(f, x));
  require(speed > 0.0, ErrorKind::infeasible, "drive vanishes at the start point");
  double hi = std::abs(target - x) / speed;
  double zhi = flow1(f, hi, x, cfg);
  int grow = 0;
  while (!passed(zhi)) {
    require(++grow < 200, ErrorKind::infeasible, "target is not reachable by the drive");
    hi *= 2.0;
    zhi = flow1(f, hi, x, cfg);
  }
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double z = flow1(f, mid, x, cfg);
    if (std::abs(z - target) <= tol) return mid;
    (passed(z) ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Transport transport_time(const WellFunction& well, double from_x, double to_x, double tol,
                         const IntegratorConfig& cfg) {
  require(well.dim == 1, ErrorKind::shape_mismatch, "transport_time needs a 1D well");
  require(std::isfinite(from_x) && std::isfinite(to_x), ErrorKind::invalid_argument, "points must be finite");
  const double lo = well.zero_box.lo[0], hi = well.zero_box.hi[0];
  require(from_x < lo || from_x > hi, ErrorKind::invalid_argument,
          "start point lies in the zero interval and cannot move");
  require(to_x < lo || to_x > hi, ErrorKind::invalid_argument, "target lies in the zero interval");
  const int side = from_x > hi ? 1 : 0;
  require((to_x > hi ? 1 : 0) == side, ErrorKind::invalid_argument,
          "points lie on opposite sides of the zero interval");
  if (from_x == to_x) return {1, 0.0};
  const int dir = to_x > from_x ? 1 : -1;
  Transport t;
  t.sign = dir * well.outside_sign(0, 0, side);
  const VectorField f = t.sign > 0 ? well.field : negated(well.field);
  t.tau = hitting_time(f, from_x, to_x, tol, cfg);
  return t;
}

void PointMatchProblem::validate() const {
  require(!xs.empty(), ErrorKind::invalid_argument, "need at least one point");
  require(xs.size() == ys.size(), ErrorKind::shape_mismatch, "xs and ys must have equal length");
  require(well.dim == 1, ErrorKind::shape_mismatch, "point matching needs a 1D well");
  require(eps > 0.0, ErrorKind::invalid_argument, "eps must be positive");
  require(all_finite(xs) && all_finite(ys), ErrorKind::invalid_argument, "points must be finite");
  for (std::size_t k = 1; k < xs.size(); ++k) {
    require(xs[k] > xs[k - 1], ErrorKind::invalid_argument, "xs must be strictly increasing");
    require(ys[k] > ys[k - 1], ErrorKind::invalid_argument, "ys must be strictly increasing");
  }
}

Schedule match_points(const PointMatchProblem& p, MatchTrace* trace, const IntegratorConfig& cfg) {
  p.validate();
  const std::size_t m = p.xs.size();
  const WellFunction& base = p.well;
  const double width = base.width(0);
  require(width > 0.0, ErrorKind::invalid_argument, "well needs a zero interval of positive width");

  double lo = std::min(p.xs.front(), p.ys.front());
  double hi = std::max(p.xs.back(), p.ys.back());
  const double margin = hi > lo ? 0.1 * (hi - lo) : width;
  const double q2 = lo - margin;
  const double q1 = q2 - width;
  const double q0 = q1 - width;
  const double a = base.zero_box.lo[0];
  const int up = base.outside_sign(0, 0, 1);
  // h_Q vanishes on [q1, q2]; the parking well vanishes on [q0, q1] and is negative right of it
  const WellFunction hQ = shifted_well(base, {q1 - a}, 1);
  const WellFunction park = shifted_well(base, {q0 - a}, -up);
  const VectorField unpark = negated(park.field);

  const double tol = p.eps / (10.0 * static_cast<double>(m));
  Schedule s(1);
  std::vector<double> cur = p.xs;
  auto advance = [&](const VectorField& f, double tau, std::size_t from) {
    s.append(f, tau);
    for (std::size_t j = from; j < m; ++j) cur[j] = flow1(f, tau, cur[j], cfg);
  };

  for (std::size_t k = 0; k < m; ++k) {
    if (std::abs(cur[k] - p.ys[k]) <= tol) continue;
    if (k == 0) {
      const Transport t = transport_time(hQ, cur[0], p.ys[0], tol, cfg);
      advance(t.sign > 0 ? hQ.field : negated(hQ.field), t.tau, 0);
    } else {
      const double parked = cur[k - 1];
      const double lead = std::min(cur[k], p.ys[k]);
      const double t1 = hitting_time(park.field, parked, q2, 0.0, cfg);
      const double t2 = hitting_time(park.field, lead, q2, 0.0, cfg);
      require(t2 > t1, ErrorKind::integrator_failure, "guard interval ordering lost");
      const double tp = 0.5 * (t1 + t2);
      const double c = flow1(park.field, tp, cur[k], cfg);
      const double y = flow1(park.field, tp, p.ys[k], cfg);
      // tighten the drive tolerance until the unparked point lands
      double stage_tol = tol * 0.1;
      Transport t;
      for (int attempt = 0; attempt < 8; ++attempt) {
        t = transport_time(hQ, c, y, stage_tol, cfg);
        const VectorField drive = t.sign > 0 ? hQ.field : negated(hQ.field);
        const double back = flow1(unpark, tp, flow1(drive, t.tau, c, cfg), cfg);
        if (std::abs(back - p.ys[k]) <= tol) break;
        stage_tol *= 0.01;
      }
      const VectorField drive = t.sign > 0 ? hQ.field : negated(hQ.field);
      const std::vector<double> before(cur.begin(), cur.begin() + static_cast<std::ptrdiff_t>(k));
      std::vector<double> earlier = before;
      for (auto& e : earlier) e = flow1(unpark, tp, flow1(drive, t.tau, flow1(park.field, tp, e, cfg), cfg), cfg);
      s.append(park.field, tp);
      s.append(drive, t.tau);
      s.append(unpark, tp);
      for (std::size_t j = k; j < m; ++j)
        cur[j] = flow1(unpark, tp, flow1(drive, t.tau, flow1(park.field, tp, cur[j], cfg), cfg), cfg);
      if (trace) {
        double drift = 0.0;
        for (std::size_t j = 0; j < k; ++j) drift = std::max(drift, std::abs(earlier[j] - before[j]));
        trace->matched.push_back(k);
        trace->drift.push_back(drift);
      }
      continue;
    }
    if (trace) {
      trace->matched.push_back(k);
      trace->drift.push_back(0.0);
    }
  }
  return s;
}

double estimate_modulus(const TargetSpec& phi, double r, std::size_t fine) {
  require(phi.in_dim() == 1 && phi.out_dim == 1, ErrorKind::shape_mismatch, "modulus needs a 1D target");
  require(fine >= 1, ErrorKind::invalid_argument, "need at least one interval");
  const double a = phi.domain.lo[0], b = phi.domain.hi[0];
  const double h = (b - a) / static_cast<double>(fine);
  std::vector<double> v(fine + 1);
  for (std::size_t i = 0; i <= fine; ++i) v[i] = phi.scalar(i == fine ? b : a + h * static_cast<double>(i));
  const auto span = static_cast<std::size_t>(std::ceil(r / h - 1e-9));
  double w = 0.0;
  for (std::size_t i = 0; i <= fine; ++i)
    for (std::size_t j = i + 1; j <= std::min(fine, i + std::max<std::size_t>(span, 1)); ++j)
      w = std::max(w, std::abs(v[j] - v[i]));
  return w;
}

ApproxIncreasing approx_increasing(const TargetSpec& phi, double eps, const WellFunction& well,
                                   const ApproxOptions& opt, const IntegratorConfig& cfg) {
  require(phi.in_dim() == 1 && phi.out_dim == 1, ErrorKind::shape_mismatch, "approx_increasing needs a 1D target");
  require(eps > 0.0 && std::isfinite(eps), ErrorKind::invalid_argument, "eps must be positive");
  const double a = phi.domain.lo[0], b = phi.domain.hi[0];
  require(b > a, ErrorKind::invalid_argument, "target domain must be a nondegenerate interval");

  double prev = phi.scalar(a);
  for (std::size_t i = 1; i <= opt.probe_points; ++i) {
    const double x = a + (b - a) * static_cast<double>(i) / static_cast<double>(opt.probe_points);
    const double y = phi.scalar(x);
    if (y < prev - 1e-12 * std::max(1.0, std::abs(prev)))
      fail(ErrorKind::obstruction, "target decreases near x = " + std::to_string(x) +
                                       "; 1D flow maps are increasing and cannot approximate it");
    prev = y;
  }

  ApproxIncreasing out;
  std::size_t M = opt.initial_intervals;
  for (;;) {
    out.mesh = (b - a) / static_cast<double>(M);
    out.omega = estimate_modulus(phi, out.mesh, 10 * M);
    if (out.omega <= eps / 2.0) break;
    require(M * 2 <= opt.max_intervals, ErrorKind::infeasible,
            "mesh needed for eps exceeds " + std::to_string(opt.max_intervals) + " intervals");
    M *= 2;
  }
  out.nodes.resize(M + 1);
  std::vector<double> ys(M + 1);
  for (std::size_t i = 0; i <= M; ++i) {
    out.nodes[i] = i == M ? b : a + out.mesh * static_cast<double>(i);
    ys[i] = phi.scalar(out.nodes[i]);
  }
  bool flat = false;
  for (std::size_t i = 1; i <= M; ++i) flat = flat || !(ys[i] > ys[i - 1]);
  if (flat) {
    out.ramp = eps / 8.0;
    for (std::size_t i = 0; i <= M; ++i) ys[i] += out.ramp * (out.nodes[i] - a) / (b - a);
    for (std::size_t i = 1; i <= M; ++i)
      require(ys[i] > ys[i - 1], ErrorKind::obstruction, "target is not increasing at the mesh nodes");
  }
  out.point_tol = eps / 8.0;
  PointMatchProblem prob{out.nodes, ys, well, out.point_tol};
  out.schedule = match_points(prob, nullptr, cfg);
  return out;
}

double sup_error_1d(const Schedule& s, const TargetSpec& phi, std::size_t points, const IntegratorConfig& cfg) {
  require(points >= 2, ErrorKind::invalid_argument, "need at least two points");
  const double a = phi.domain.lo[0], b = phi.domain.hi[0];
  std::vector<Point> xs(points);
  for (std::size_t i = 0; i < points; ++i)
    xs[i] = {a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1)};
  const auto ys = flow_eval_batch(s, xs, cfg);
  double e = 0.0;
  for (std::size_t i = 0; i < points; ++i) e = std::max(e, std::abs(ys[i][0] - phi.scalar(xs[i][0])));
  return e;
}

bool increasing_on_grid(const Schedule& s, double a, double b, std::size_t points, const IntegratorConfig& cfg) {
  require(points >= 2 && b > a, ErrorKind::invalid_argument, "need a nondegenerate grid");
  std::vector<Point> xs(points);
  for (std::size_t i = 0; i < points; ++i)
    xs[i] = {a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1)};
  const auto ys = flow_eval_batch(s, xs, cfg);
  for (std::size_t i = 1; i < points; ++i)
    if (!(ys[i][0] > ys[i - 1][0])) return false;
  return true;
}

}  // namespace flowmap
