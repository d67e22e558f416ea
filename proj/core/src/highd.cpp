#include <flowmap/highd.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <flowmap/errors.hpp>
#include <flowmap/families.hpp>
#include <flowmap/integrator.hpp>
#include <flowmap/oned.hpp>
#include <flowmap/parallel.hpp>
#include <flowmap/tensor.hpp>

namespace flowmap {

namespace {

std::size_t ipow(std::size_t b, std::size_t e) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= b;
  return r;
}

bool is_unit_cube(const Box& b) {
  for (std::size_t i = 0; i < b.dim(); ++i)
    if (b.lo[i] != 0.0 || b.hi[i] != 1.0) return false;
  return true;
}

// z -> W_k(base + z e_k), the well seen along coordinate k
class LineSliceField final : public FieldImpl {
 public:
  LineSliceField(VectorField inner, std::size_t k, Point base)
      : inner_(std::move(inner)), k_(k), base_(std::move(base)) {}
  std::size_t dim() const override { return 1; }
  void eval(std::span<const double> z, std::span<double> out) const override {
    thread_local Point arg, res;
    arg = base_;
    arg[k_] = z[0];
    res.assign(arg.size(), 0.0);
    inner_.eval(arg, res);
    out[0] = res[k_];
  }
  double lipschitz_bound() const override { return inner_.lipschitz_bound(); }
  std::string family_tag() const override { return "line_slice"; }
  json params() const override { return {{"coordinate", k_}, {"inner", field_to_json(inner_)}}; }
  bool has_slices() const override { return inner_.impl().has_slices(); }
  PiecewiseAffine slice(std::size_t, std::span<const double> base, std::span<const double> dir) const override {
    Point b = base_, d(base_.size(), 0.0);
    b[k_] = base[0];
    d[k_] = dir[0];
    return inner_.impl().slice(k_, b, d);
  }

 private:
  VectorField inner_;
  std::size_t k_;
  Point base_;
};

// D_i W_i(.) with the control coordinate c read through a x_c + (hi_c - a kink)
VectorField hinge_field(const WellFunction& w, std::size_t i, std::size_t c, double kink, double a, double sign) {
  const std::size_t n = w.dim;
  AffineRestriction r;
  r.D.assign(n, 0.0);
  r.D[i] = sign;
  r.A = Matrix(n, n);
  r.A(c, c) = a;
  r.b = w.zero_box.center();
  r.b[c] = w.zero_box.hi[c] - a * kink;
  return apply_restriction(w.field, r);
}

double min_gap(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j < v.size(); ++j) g = std::min(g, v[j] - v[j - 1]);
  return g;
}

std::size_t count_pairs(std::vector<double> v, double tol) {
  std::sort(v.begin(), v.end());
  std::size_t pairs = 0, lo = 0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    while (v[j] - v[lo] > tol) ++lo;
    pairs += j - lo;
  }
  return pairs;
}

void check_dims(const std::vector<Point>& pts, std::size_t n, const char* what) {
  for (const auto& p : pts) {
    require(p.size() == n, ErrorKind::shape_mismatch, std::string(what) + " have the wrong dimension");
    require(all_finite(p), ErrorKind::invalid_argument, std::string(what) + " must be finite");
  }
}

}  // namespace

Point GridTarget::corner(std::size_t cell) const {
  Point x(n);
  for (std::size_t k = 0; k < n; ++k) {
    x[k] = static_cast<double>(cell % N) / static_cast<double>(N);
    cell /= N;
  }
  return x;
}

std::size_t GridTarget::cell_of(std::span<const double> x) const {
  std::size_t cell = 0, stride = 1;
  for (std::size_t k = 0; k < n; ++k) {
    const double f = std::floor(x[k] * static_cast<double>(N));
    const auto i = static_cast<std::size_t>(std::clamp(f, 0.0, static_cast<double>(N - 1)));
    cell += i * stride;
    stride *= N;
  }
  return cell;
}

double GridTarget::sup_norm() const {
  double s = 0.0;
  for (const auto& v : values) s = std::max(s, norm2(v));
  return s;
}

std::vector<Point> grid_corners(std::size_t n, std::size_t N) {
  GridTarget g;
  g.n = n;
  g.N = N;
  std::vector<Point> out(ipow(N, n));
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = g.corner(c);
  return out;
}

GridTarget make_grid_target(const TargetSpec& F, std::size_t N, double p, std::size_t q) {
  require(N >= 1 && q >= 1, ErrorKind::invalid_argument, "grid and quadrature sizes must be positive");
  require(p >= 1.0 && std::isfinite(p), ErrorKind::invalid_argument, "p must be finite and at least 1");
  require(is_unit_cube(F.domain), ErrorKind::invalid_argument, "grid targets live on the unit cube");
  GridTarget g;
  g.n = F.in_dim();
  g.N = N;
  g.p = p;
  const std::size_t cells = ipow(N, g.n);
  g.values.resize(cells);
  std::vector<double> err(cells, 0.0);
  const std::size_t sub = ipow(q, g.n);
  const double h = 1.0 / static_cast<double>(N);
  parallel_for(cells, [&](std::size_t c) {
    const Point lo = g.corner(c);
    Point x(g.n);
    for (std::size_t k = 0; k < g.n; ++k) x[k] = lo[k] + 0.5 * h;
    g.values[c] = F(x);
    double acc = 0.0;
    for (std::size_t s = 0; s < sub; ++s) {
      std::size_t r = s;
      for (std::size_t k = 0; k < g.n; ++k) {
        x[k] = lo[k] + h * (static_cast<double>(r % q) + 0.5) / static_cast<double>(q);
        r /= q;
      }
      acc += std::pow(dist2(F(x), g.values[c]), p);
    }
    err[c] = acc / static_cast<double>(sub) * std::pow(h, static_cast<double>(g.n));
  });
  g.lp_error = std::pow(std::accumulate(err.begin(), err.end(), 0.0), 1.0 / p);
  return g;
}

void ShrinkSpec::validate() const {
  require(alpha > 0.0 && alpha < 1.0, ErrorKind::invalid_argument,
          "alpha must lie in (0, 1); alpha = 1 gives a discontinuous staircase");
  require(N >= 1, ErrorKind::invalid_argument, "N must be positive");
  require(eps1 > 0.0 && std::isfinite(eps1), ErrorKind::invalid_argument, "eps1 must be positive");
}

double h_alpha(double alpha, std::size_t N, double x) {
  if (x <= 0.0 || x >= 1.0) return x;
  const double Nd = static_cast<double>(N);
  const double i = std::min(std::floor(x * Nd), Nd - 1.0);
  const double local = x * Nd - i;
  if (local <= alpha) return i / Nd;
  return (i + (local - alpha) / (1.0 - alpha)) / Nd;
}

PiecewiseLinear contraction_nodes(const ShrinkSpec& spec, double ramp) {
  spec.validate();
  const double Nd = static_cast<double>(spec.N);
  require(ramp > 0.0 && ramp < 0.5 / Nd, ErrorKind::invalid_argument, "ramp must be positive and below half a cell");
  PiecewiseLinear pl;
  for (std::size_t i = 0; i < spec.N; ++i) {
    const double id = static_cast<double>(i);
    pl.xs.push_back(id / Nd);
    pl.ys.push_back(id / Nd);
    pl.xs.push_back((id + spec.alpha) / Nd);
    pl.ys.push_back(id / Nd + ramp);
  }
  pl.xs.push_back(1.0);
  pl.ys.push_back(1.0);
  return pl;
}

WellFunction coordinate_slice_well(const WellFunction& well, std::size_t k) {
  require(k < well.dim, ErrorKind::invalid_argument, "slice coordinate out of range");
  WellFunction w;
  w.dim = 1;
  Point base = well.zero_box.center();
  base[k] = 0.0;
  w.field = VectorField(std::make_shared<LineSliceField>(well.field, k, base));
  w.zero_box = Box{{well.zero_box.lo[k]}, {well.zero_box.hi[k]}};
  w.signs = {well.outside_sign(k, k, 0), well.outside_sign(k, k, 1)};
  w.zero_tolerance = well.zero_tolerance;
  w.certified_slack = well.certified_slack;
  w.kind = well.kind + "_slice";
  return w;
}

Schedule lift_slice_schedule(const Schedule& s1d, const WellFunction& well, std::size_t k) {
  require(s1d.dim() == 1, ErrorKind::shape_mismatch, "expected a 1D schedule");
  const std::size_t n = well.dim;
  Point base = well.zero_box.center();
  base[k] = 0.0;
  Schedule out(n);
  for (const auto& st : s1d.steps()) {
    AffineRestriction r1 = AffineRestriction::identity(1);
    VectorField inner = st.field;
    if (auto parts = restriction_parts(st.field)) {
      inner = parts->first;
      r1 = parts->second;
    }
    require(inner.family_tag() == "line_slice", ErrorKind::unsupported,
            "1D step is not built on a coordinate slice of the well");
    AffineRestriction r;
    r.D.assign(n, 0.0);
    r.D[k] = r1.D[0];
    r.A = Matrix(n, n);
    r.A(k, k) = r1.A(0, 0);
    r.b = base;
    r.b[k] = r1.b[0];
    out.append(apply_restriction(well.field, r), st.tau);
  }
  return out;
}

Schedule build_contraction(const ShrinkSpec& spec, const WellFunction& well) {
  spec.validate();
  const std::size_t n = well.dim;
  const double per_coord = spec.eps1 / std::sqrt(static_cast<double>(n));
  const double ramp = std::min(0.5 * per_coord, 0.25 / static_cast<double>(spec.N));
  const PiecewiseLinear nodes = contraction_nodes(spec, ramp);
  Schedule out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const WellFunction slice = coordinate_slice_well(well, k);
    PointMatchProblem prob{nodes.xs, nodes.ys, slice, 0.5 * per_coord};
    out.append(lift_slice_schedule(match_points(prob), well, k));
  }
  return out;
}

std::size_t collision_count(const std::vector<Point>& pts, std::size_t coord, double tol) {
  std::vector<double> v;
  v.reserve(pts.size());
  for (const auto& p : pts) v.push_back(p[coord]);
  return count_pairs(std::move(v), tol);
}

std::size_t collision_count(const std::vector<Point>& pts, double tol) {
  if (pts.empty()) return 0;
  std::size_t total = 0;
  for (std::size_t k = 0; k < pts.front().size(); ++k) total += collision_count(pts, k, tol);
  return total;
}

Schedule separate_with(const std::vector<Point>& pts, double eps, const ShearRealizer& realize,
                       SeparationTrace* trace, double tol) {
  require(!pts.empty(), ErrorKind::invalid_argument, "no points to separate");
  const std::size_t n = pts.front().size();
  const std::size_t m = pts.size();
  check_dims(pts, n, "points");
  require(eps > 0.0 && std::isfinite(eps), ErrorKind::invalid_argument, "eps must be positive");
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b)
      require(dist2(pts[a], pts[b]) > tol, ErrorKind::invalid_argument, "points must be pairwise distinct");
  Schedule out(n);
  if (trace) *trace = {};
  if (trace) trace->collisions.push_back(collision_count(pts, tol));
  if (collision_count(pts, tol) == 0) return out;
  require(n >= 2, ErrorKind::invalid_argument, "separation needs n >= 2");

  const double eps_stage = eps / (std::sqrt(static_cast<double>(n)) * static_cast<double>(n - 1));
  std::vector<Point> cur = pts;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t guard = 0; collision_count(cur, i, tol) > 0; ++guard) {
      require(guard < n, ErrorKind::infeasible, "separation did not converge");
      // control coordinate telling apart the most colliding pairs
      std::size_t best = i, best_count = 0;
      for (std::size_t c = 0; c < n; ++c) {
        if (c == i) continue;
        std::size_t count = 0;
        for (std::size_t a = 0; a < m; ++a)
          for (std::size_t b = a + 1; b < m; ++b)
            if (std::abs(cur[a][i] - cur[b][i]) <= tol && std::abs(cur[a][c] - cur[b][c]) > tol) ++count;
        if (count > best_count) {
          best = c;
          best_count = count;
        }
      }
      require(best_count > 0, ErrorKind::invalid_argument, "points must be pairwise distinct");
      const std::size_t c = best;
      double lo = cur[0][c], hi = cur[0][c];
      for (const auto& p : cur) {
        lo = std::min(lo, p[c]);
        hi = std::max(hi, p[c]);
      }
      const double span = hi - lo;
      const double kink = lo - span;
      const double s_max = eps_stage / (2.0 * span);
      const std::size_t before = collision_count(cur, i, tol);
      double best_rate = 0.0, best_gap = -1.0;
      for (int q = 0; q <= 16; ++q) {
        const double s = s_max * (1.0 - q / 32.0);
        std::vector<double> v(m);
        for (std::size_t j = 0; j < m; ++j) v[j] = cur[j][i] + s * (cur[j][c] - kink);
        if (count_pairs(v, tol) >= before) continue;
        const double g = min_gap(v);
        if (g > best_gap) {
          best_gap = g;
          best_rate = s;
        }
      }
      require(best_rate > 0.0, ErrorKind::infeasible, "no shear rate reduces the collisions");
      const ShearMove move{i, c, kink, best_rate};
      const Schedule stage = realize(move, cur);
      std::vector<Point> next = flow_eval_batch(stage, cur);
      for (std::size_t j = 0; j < m; ++j) {
        const double want = cur[j][i] + best_rate * (cur[j][c] - kink);
        require(std::abs(next[j][i] - want) <= 1e-9 * std::max(1.0, std::abs(want)), ErrorKind::regime_violation,
                "shear stage does not realize the requested move");
        for (std::size_t k = 0; k < n; ++k)
          if (k != i)
            require(std::abs(next[j][k] - cur[j][k]) <= 1e-12, ErrorKind::regime_violation,
                    "shear stage moved a frozen coordinate");
      }
      cur = std::move(next);
      out.append(stage);
      if (trace) {
        trace->collisions.push_back(collision_count(cur, tol));
        trace->driven.push_back(i);
      }
    }
  }
  if (trace)
    for (std::size_t j = 0; j < m; ++j) trace->max_displacement = std::max(trace->max_displacement, dist2(cur[j], pts[j]));
  return out;
}

Schedule separate_points(const std::vector<Point>& pts, const WellFunction& well, double eps,
                         SeparationTrace* trace) {
  const ShearRealizer realize = [&well](const ShearMove& mv, const std::vector<Point>& at) {
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& p : at) top = std::max(top, p[mv.control]);
    const double a = std::min(1.0, 1.0 / (top - mv.kink));
    const VectorField f =
        hinge_field(well, mv.coord, mv.control, mv.kink, a, well.outside_sign(mv.coord, mv.control, 1));
    Point probe = at.front();
    probe[mv.control] = top;
    const double slope = f(probe)[mv.coord] / (top - mv.kink);
    require(slope > 0.0, ErrorKind::regime_violation, "well is not active above its zero box");
    Schedule s(well.dim);
    s.append(f, mv.rate / slope);
    return s;
  };
  require(pts.empty() || pts.front().size() == well.dim, ErrorKind::shape_mismatch, "well dimension mismatch");
  return separate_with(pts, eps, realize, trace);
}

std::vector<Point> distinct_leading_coordinate(const std::vector<Point>& ys, double eps) {
  require(eps > 0.0, ErrorKind::invalid_argument, "eps must be positive");
  std::vector<Point> out = ys;
  if (ys.size() < 2) return out;
  const double delta = eps / (2.0 * static_cast<double>(ys.size()));
  std::vector<std::size_t> order(ys.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ys[a][0] < ys[b][0]; });
  for (std::size_t q = 1; q < order.size(); ++q)
    out[order[q]][0] = std::max(ys[order[q]][0], out[order[q - 1]][0] + delta);
  return out;
}

Schedule transport_points(const std::vector<Point>& xs, const std::vector<Point>& ys, const WellFunction& well,
                          double eps, TransportTrace* trace) {
  const std::size_t n = well.dim;
  const std::size_t m = xs.size();
  require(m >= 1 && ys.size() == m, ErrorKind::shape_mismatch, "need matching nonempty point lists");
  require(n >= 2, ErrorKind::invalid_argument, "transport needs n >= 2");
  check_dims(xs, n, "source points");
  check_dims(ys, n, "target points");
  require(eps > 0.0 && std::isfinite(eps), ErrorKind::invalid_argument, "eps must be positive");
  require(collision_count(xs, 0.0) == 0, ErrorKind::invalid_argument,
          "source points must have distinct coordinates; separate them first");
  const std::vector<Point> targets = distinct_leading_coordinate(ys, eps);
  std::vector<Point> cur = xs;
  Schedule out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = (i + 1) % n;
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cur[a][c] < cur[b][c]; });
    const double lo = cur[order.front()][c], hi = cur[order.back()][c];
    const double span = hi - lo;
    const double a = std::min({1.0, well.width(c) / (span + 1.0), 1.0 / (span + 1.0)});
    for (std::size_t q = 0; q < m; ++q) {
      const std::size_t k = order[q];
      const double delta = targets[k][i] - cur[k][i];
      if (delta == 0.0) continue;
      const double x = cur[k][c];
      const double below = q > 0 ? x - cur[order[q - 1]][c] : std::numeric_limits<double>::infinity();
      const double above = q + 1 < m ? cur[order[q + 1]][c] - x : std::numeric_limits<double>::infinity();
      require(below > 0.0 && above > 0.0, ErrorKind::invalid_argument, "control coordinate values must be distinct");
      double h = 0.5 * std::min(below, above);
      if (!std::isfinite(h)) h = 0.5;
      const double sigma = (delta > 0.0 ? 1.0 : -1.0) * well.outside_sign(i, c, 1);
      // hat of hinges at x - h, x, x + h: only point k moves
      std::vector<std::pair<VectorField, double>> parts;
      parts.emplace_back(hinge_field(well, i, c, x - h, a, sigma), 1.0);
      if (m > 1) {
        parts.emplace_back(hinge_field(well, i, c, x, a, -sigma), 2.0);
        parts.emplace_back(hinge_field(well, i, c, x + h, a, sigma), 1.0);
      }
      const double v = parts.front().first(cur[k])[i];
      require(v * delta > 0.0, ErrorKind::regime_violation, "well does not push in the required direction");
      const double t = delta / v;
      std::vector<double> disp(m, 0.0);
      for (const auto& [f, w] : parts)
        for (std::size_t j = 0; j < m; ++j) disp[j] += w * t * f(cur[j])[i];
      for (std::size_t j = 0; j < m; ++j)
        if (j != k)
          require(std::abs(disp[j]) <= 1e-9 * std::max(1.0, std::abs(delta)), ErrorKind::regime_violation,
                  "transport stage disturbs other points; the well is not affine outside its zero box");
      for (const auto& [f, w] : parts) out.append(f, w * t);
      for (std::size_t j = 0; j < m; ++j) cur[j][i] += disp[j];
    }
  }
  const std::vector<Point> end = flow_eval_batch(out, xs);
  for (std::size_t k = 0; k < m; ++k)
    require(dist2(end[k], ys[k]) <= eps, ErrorKind::integrator_failure,
            "transport missed a target by " + std::to_string(dist2(end[k], ys[k])));
  if (trace) {
    trace->targets = targets;
    trace->stages = out.size();
  }
  return out;
}

std::string_view to_string(Backend b) noexcept { return b == Backend::well ? "well" : "tensor"; }

Backend backend_from_string(std::string_view s) {
  if (s == "well") return Backend::well;
  if (s == "tensor") return Backend::tensor;
  fail(ErrorKind::invalid_argument, "unknown backend: " + std::string(s));
}

json report_to_json(const Report& r, bool with_wall_time) {
  json j;
  j["n"] = r.n;
  j["p"] = r.p;
  j["eps"] = r.eps;
  j["N"] = r.N;
  j["alpha"] = r.alpha;
  j["eps1"] = r.eps1;
  j["eps2"] = r.eps2;
  j["total_time_T"] = r.total_time_T;
  j["stages"] = {{"contraction", r.stages.contraction},
                 {"separation", r.stages.separation},
                 {"transport", r.stages.transport},
                 {"total", r.stages.total()}};
  j["measured_lp_error"] = r.measured_lp_error;
  if (with_wall_time) j["wall_time"] = r.wall_time;
  j["backend"] = r.backend;
  j["grid_error"] = r.grid_error;
  j["omega_psi"] = r.omega_psi;
  j["leak_diameter"] = r.leak_diameter;
  j["mc_std_error"] = r.mc_std_error;
  j["mc_samples"] = r.mc_samples;
  return j;
}

namespace {

// sup of |g psi(x + d) - g psi(x)| over the anchors and |d| <= r
double probe_modulus(const Schedule& psi, const TerminalMap& g, const std::vector<Point>& anchors, double r) {
  const std::size_t n = psi.dim();
  std::vector<Point> dirs;
  for (std::size_t k = 0; k < n; ++k)
    for (double s : {-1.0, 1.0}) {
      Point d(n, 0.0);
      d[k] = s;
      dirs.push_back(d);
    }
  std::mt19937_64 rng(20240601);
  std::normal_distribution<double> gauss;
  for (int q = 0; q < 8; ++q) {
    Point d(n);
    for (auto& v : d) v = gauss(rng);
    const double nd = norm2(d);
    for (auto& v : d) v /= nd;
    dirs.push_back(d);
  }
  std::vector<double> worst(anchors.size(), 0.0);
  parallel_for(anchors.size(), [&](std::size_t a) {
    const Point base = g(flow_eval(psi, anchors[a]));
    for (double scale : {0.5, 1.0})
      for (const auto& d : dirs) {
        Point x = anchors[a];
        for (std::size_t k = 0; k < n; ++k) x[k] += scale * r * d[k];
        worst[a] = std::max(worst[a], dist2(g(flow_eval(psi, x)), base));
      }
  });
  return *std::max_element(worst.begin(), worst.end());
}

// bounding-box diagonal of g psi over a grid and random points of [lo, hi]^n
double probe_diameter(const Schedule& psi, const TerminalMap& g, double lo, double hi, std::size_t per_axis) {
  const std::size_t n = psi.dim();
  std::vector<Point> xs;
  const std::size_t total = ipow(per_axis, n);
  for (std::size_t s = 0; s < total; ++s) {
    Point x(n);
    std::size_t r = s;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] = lo + (hi - lo) * static_cast<double>(r % per_axis) / static_cast<double>(per_axis - 1);
      r /= per_axis;
    }
    xs.push_back(x);
  }
  std::mt19937_64 rng(777);
  for (int q = 0; q < 256; ++q) {
    Point x(n);
    for (auto& v : x) v = lo + (hi - lo) * std::generate_canonical<double, 53>(rng);
    xs.push_back(x);
  }
  const auto ys = flow_eval_batch(psi, xs);
  Point bmin, bmax;
  for (const auto& y : ys) {
    const Point z = g(y);
    if (bmin.empty()) {
      bmin = bmax = z;
      continue;
    }
    for (std::size_t k = 0; k < z.size(); ++k) {
      bmin[k] = std::min(bmin[k], z[k]);
      bmax[k] = std::max(bmax[k], z[k]);
    }
  }
  return dist2(bmin, bmax);
}

}  // namespace

LpResult approximate_lp(const TargetSpec& F, double eps, double p, const WellFunction& well, const LpOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = F.in_dim();
  require(n >= 2, ErrorKind::invalid_argument, "the L^p pipeline needs n >= 2; use approx1d for n = 1");
  require(is_unit_cube(F.domain), ErrorKind::invalid_argument, "the L^p pipeline works on the unit cube");
  require(eps > 0.0 && std::isfinite(eps), ErrorKind::invalid_argument, "eps must be positive");
  require(p >= 1.0 && std::isfinite(p), ErrorKind::invalid_argument, "p must be finite and at least 1");
  if (opt.backend == Backend::well)
    require(well.dim == n, ErrorKind::shape_mismatch, "well dimension does not match the target");
  const TerminalMap g = opt.terminal ? *opt.terminal : TerminalMap::identity(n);
  g.validate();
  require(g.in_dim() == n && g.out_dim() == F.out_dim, ErrorKind::shape_mismatch,
          "terminal map does not connect the flow to the target");
  const double lip = g.lipschitz_bound();
  require(lip > 0.0, ErrorKind::invalid_argument, "terminal map must not vanish");

  // piecewise-constant target within eps / 2
  GridTarget grid;
  if (opt.grid_N > 0) {
    grid = make_grid_target(F, opt.grid_N, p, opt.quadrature_per_axis);
    require(grid.lp_error <= eps / 2, ErrorKind::infeasible,
            "grid N = " + std::to_string(opt.grid_N) + " leaves L^p error " + std::to_string(grid.lp_error) +
                " above eps/2");
  } else {
    for (std::size_t N = 2;; ++N) {
      require(N <= opt.max_N, ErrorKind::infeasible,
              "no grid up to N = " + std::to_string(opt.max_N) + " meets the eps/2 grid budget");
      grid = make_grid_target(F, N, p, opt.quadrature_per_axis);
      if (grid.lp_error <= eps / 2) break;
    }
  }
  const std::size_t N = grid.N;
  const double Nd = static_cast<double>(N);
  const std::vector<Point> ys = lift_targets(grid.values, g);
  const std::vector<Point> corners = grid_corners(n, N);

  // point transport psi with corner error eps1
  const double growth = std::pow(Nd, static_cast<double>(n) - static_cast<double>(n) / p);
  const double eps1 = eps / (8.0 * lip * growth);
  const double sep_eps = 0.5 / Nd;
  Schedule sep = opt.backend == Backend::well ? separate_points(corners, well, sep_eps)
                                              : tensor_separate(corners, sep_eps);
  const std::vector<Point> moved = flow_eval_batch(sep, corners);
  Schedule tr = opt.backend == Backend::well ? transport_points(moved, ys, well, eps1)
                                             : tensor_transport_separated(moved, ys, eps1);
  Schedule psi = sep;
  psi.append(tr);

  // contraction tolerance eps2 with omega_psi(eps2) <= eps / 8
  double eps2 = 0.25 / Nd;
  double omega = probe_modulus(psi, g, corners, eps2);
  for (int it = 0; omega > eps / 8; ++it) {
    require(it < 80, ErrorKind::infeasible, "transport map is too steep to bound its modulus");
    eps2 *= 0.5;
    omega = probe_modulus(psi, g, corners, eps2);
  }
  require(omega + growth * eps1 * lip <= eps / 4 * (1 + 1e-12), ErrorKind::infeasible,
          "corner budget exceeds eps/4");

  // shrink factor alpha from the leakage bound
  const double diam = probe_diameter(psi, g, -eps2, 1.0 + eps2, 4 * N + 1);
  const double ratio = eps / (4.0 * (diam + grid.sup_norm()));
  const double needed = ratio >= 1.0 ? 0.0 : std::pow(1.0 - std::pow(ratio, p), 1.0 / static_cast<double>(n));
  const double alpha = opt.alpha ? *opt.alpha : std::max(needed, 0.9);
  require(alpha >= needed, ErrorKind::infeasible, "alpha is below the leakage bound " + std::to_string(needed));
  require(alpha <= 1.0 - 1e-9, ErrorKind::infeasible, "leakage budget forces alpha to 1");
  const ShrinkSpec shrink{alpha, N, eps2};
  Schedule full = opt.backend == Backend::well ? build_contraction(shrink, well) : tensor_contraction(shrink, n);

  LpResult res;
  res.report.stages.contraction = full.size();
  res.report.stages.separation = sep.size();
  res.report.stages.transport = tr.size();
  full.append(psi);
  res.schedule = full;

  const LpEstimate est = compose_and_measure(g, full, F, p, opt.mc_samples, opt.seed);
  Report& r = res.report;
  r.n = n;
  r.p = p;
  r.eps = eps;
  r.N = N;
  r.alpha = alpha;
  r.eps1 = eps1;
  r.eps2 = eps2;
  r.total_time_T = full.total_time();
  r.measured_lp_error = est.value;
  r.backend = std::string(to_string(opt.backend));
  r.grid_error = grid.lp_error;
  r.omega_psi = omega;
  r.leak_diameter = diam;
  r.mc_std_error = est.std_error;
  r.mc_samples = est.samples;
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace flowmap
