#include <flowmap/tensor.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <flowmap/errors.hpp>
#include <flowmap/families.hpp>
#include <flowmap/integrator.hpp>
#include <flowmap/rates.hpp>

namespace flowmap {

namespace {

VectorField tensor_stage(const VectorField& g, std::size_t n, const std::vector<double>& D, const Matrix& A) {
  AffineRestriction r;
  r.D = D;
  r.A = A;
  r.b.assign(n, 0.0);
  r.regime = Regime::tensor;
  return apply_restriction(tensor_field(g, n), r);
}

void check_indices(std::size_t i, std::size_t j, std::size_t n) {
  require(i < n && j < n, ErrorKind::invalid_argument, "shear coordinates out of range");
  require(i != j, ErrorKind::invalid_argument, "shear needs two different coordinates");
}

}  // namespace

Schedule comove_schedule(const Schedule& g, std::size_t i, std::size_t j, std::size_t n, int sign) {
  require(g.dim() == 1, ErrorKind::shape_mismatch, "shear profile must be a 1D schedule");
  check_indices(i, j, n);
  std::vector<double> D(n, 0.0);
  D[i] = sign >= 0 ? 1.0 : -1.0;
  D[j] = 1.0;
  Matrix A(n, n);
  A(i, j) = 1.0;
  A(j, j) = 1.0;
  Schedule out(n);
  for (const auto& st : g.steps()) out.append(tensor_stage(st.field, n, D, A), st.tau);
  return out;
}

Schedule shear_schedule(const Schedule& g, std::size_t i, std::size_t j, std::size_t n, const ShearOptions& opt) {
  Schedule out = comove_schedule(g, i, j, n, opt.sign);
  std::vector<double> Dj(n, 0.0);
  Dj[j] = -1.0;
  Matrix Aj(n, n);
  Aj(j, j) = 1.0;
  for (auto it = g.steps().rbegin(); it != g.steps().rend(); ++it) out.append(tensor_stage(it->field, n, Dj, Aj), it->tau);
  if (opt.include_identity) {
    // x_i += sign (relu(x_j) - relu(-x_j))
    std::vector<double> Di(n, 0.0);
    Di[i] = opt.sign >= 0 ? 1.0 : -1.0;
    Matrix Ai(n, n);
    Ai(i, j) = 1.0;
    out.append(tensor_stage(relu_field(Matrix(1, 1, 1.0), Matrix(1, 1, 1.0), {0.0}), n, Di, Ai), 1.0);
    out.append(tensor_stage(relu_field(Matrix(1, 1, -1.0), Matrix(1, 1, -1.0), {0.0}), n, Di, Ai), 1.0);
  }
  return out;
}

IncreasingPair increasing_pair(const std::vector<double>& at, const std::vector<double>& d, double slack) {
  const std::size_t m = at.size();
  require(m >= 1 && d.size() == m, ErrorKind::shape_mismatch, "need one shift per abscissa");
  require(all_finite(at) && all_finite(d), ErrorKind::invalid_argument, "abscissae and shifts must be finite");
  for (std::size_t k = 1; k < m; ++k)
    require(at[k] > at[k - 1], ErrorKind::invalid_argument, "abscissae must be strictly increasing");
  IncreasingPair out;
  if (m == 1) {
    out.P = translation_gadget(d[0], slack, at[0], at[0]);
    return out;
  }
  // Q scales about a point left of the data; P = Q + g with g the interpolant of d,
  // constant outside the data, so the shear stays bounded away from the data too
  const double c0 = at.front() - 1.0;
  double steep = 0.0;
  for (std::size_t k = 1; k < m; ++k) steep = std::max(steep, (d[k - 1] - d[k]) / (at[k] - at[k - 1]));
  const double L = std::max(1.0, 2.0 * steep);
  if (L > 1.0) out.Q.append(relu_field(Matrix(1, 1, 1.0), Matrix(1, 1, 1.0), {-c0}), std::log(L));
  std::vector<double> breaks{c0}, u{std::log(L)};
  for (std::size_t k = 0; k + 1 < m; ++k) {
    const double slope = L + (d[k + 1] - d[k]) / (at[k + 1] - at[k]);
    require(slope > 0.0, ErrorKind::infeasible, "increasing pair interpolation failed");
    breaks.push_back(at[k]);
    u.push_back(std::log(slope));
  }
  breaks.push_back(at.back());
  u.push_back(std::log(L));
  breaks.push_back(at.back() + 1.0);
  out.P = compile_heaviside_flow(profile_from_pieces(breaks, u), c0 + d[0], CompileMode::open_right, slack).schedule;
  return out;
}

Schedule tensor_contraction(const ShrinkSpec& spec, std::size_t n) {
  spec.validate();
  require(n >= 1, ErrorKind::invalid_argument, "dimension must be positive");
  const double ramp = std::min(0.5 * spec.eps1 / std::sqrt(static_cast<double>(n)), 0.25 / static_cast<double>(spec.N));
  const TargetSpec h = pwl_target("h_alpha", contraction_nodes(spec, ramp));
  const CompiledFlow c = compile_heaviside_flow(tv_log_derivative(h), 0.0, CompileMode::extended);
  Schedule out(n);
  for (const auto& st : c.schedule.steps()) out.append(tensor_field(st.field, n), st.tau);
  return out;
}

Schedule tensor_separate(const std::vector<Point>& pts, double eps, SeparationTrace* trace) {
  const ShearRealizer realize = [](const ShearMove& mv, const std::vector<Point>& at) {
    Schedule g(1);
    g.append(relu_field(Matrix(1, 1, 1.0), Matrix(1, 1, 1.0), {-mv.kink}), std::log1p(mv.rate));
    return shear_schedule(g, mv.coord, mv.control, at.front().size());
  };
  return separate_with(pts, eps, realize, trace);
}

Schedule tensor_transport_separated(const std::vector<Point>& xs, const std::vector<Point>& ys, double eps) {
  const std::size_t m = xs.size();
  require(m >= 1 && ys.size() == m, ErrorKind::shape_mismatch, "need matching nonempty point lists");
  const std::size_t n = xs.front().size();
  require(n >= 2, ErrorKind::invalid_argument, "transport needs n >= 2");
  for (std::size_t k = 0; k < m; ++k)
    require(xs[k].size() == n && ys[k].size() == n, ErrorKind::shape_mismatch, "point dimensions disagree");
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
    std::vector<double> at(m), d(m);
    bool moves = false;
    for (std::size_t q = 0; q < m; ++q) {
      at[q] = cur[order[q]][c];
      d[q] = targets[order[q]][i] - cur[order[q]][i];
      moves = moves || d[q] != 0.0;
    }
    if (!moves) continue;
    const IncreasingPair pq = increasing_pair(at, d);
    Schedule stage = shear_schedule(pq.P, i, c, n);
    if (!pq.Q.empty()) stage.append(shear_schedule(pq.Q, i, c, n, {.sign = -1}));
    cur = flow_eval_batch(stage, cur);
    out.append(stage);
  }
  const std::vector<Point> end = flow_eval_batch(out, xs);
  for (std::size_t k = 0; k < m; ++k)
    require(dist2(end[k], ys[k]) <= eps, ErrorKind::integrator_failure,
            "tensor transport missed a target by " + std::to_string(dist2(end[k], ys[k])));
  return out;
}

Schedule tensor_transport(const std::vector<Point>& xs, const std::vector<Point>& ys, double eps) {
  require(!xs.empty(), ErrorKind::invalid_argument, "no points to transport");
  if (collision_count(xs, 0.0) == 0) return tensor_transport_separated(xs, ys, eps);
  Point lo = xs.front(), hi = xs.front();
  for (const auto& x : xs)
    for (std::size_t k = 0; k < x.size(); ++k) {
      lo[k] = std::min(lo[k], x[k]);
      hi[k] = std::max(hi[k], x[k]);
    }
  const double scale = std::max(dist2(lo, hi), 1e-6);
  Schedule out = tensor_separate(xs, 0.25 * scale);
  out.append(tensor_transport_separated(flow_eval_batch(out, xs), ys, eps));
  return out;
}

}  // namespace flowmap
