#include <flowmap/rates.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include <flowmap/errors.hpp>
#include <flowmap/families.hpp>

namespace flowmap {

double LogDerivativeProfile::value(double x) const {
  const auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
  std::size_t j = it == breaks.begin() ? 0 : static_cast<std::size_t>(it - breaks.begin()) - 1;
  return u[std::min(j, u.size() - 1)];
}

namespace {

void fill_tv(LogDerivativeProfile& p, const std::vector<double>& seq) {
  // seq: u sampled left to right; extension by zero on both sides
  p.tv_interior = 0.0;
  for (std::size_t j = 1; j < seq.size(); ++j) p.tv_interior += std::abs(seq[j] - seq[j - 1]);
  p.tv = std::abs(seq.front());
  for (std::size_t j = 1; j < seq.size(); ++j) p.tv += std::abs(seq[j] - seq[j - 1]);
  p.tv += std::abs(seq.back());
}

double derivative(const TargetSpec& phi, double x) {
  const double h = 1e-6;
  if (x - h < 0.0) return (-3.0 * phi.scalar(x) + 4.0 * phi.scalar(x + h) - phi.scalar(x + 2 * h)) / (2 * h);
  if (x + h > 1.0) return (3.0 * phi.scalar(x) - 4.0 * phi.scalar(x - h) + phi.scalar(x - 2 * h)) / (2 * h);
  return (phi.scalar(x + h) - phi.scalar(x - h)) / (2 * h);
}

double log_derivative(const TargetSpec& phi, double x) {
  const double d = derivative(phi, x);
  require(d > 0.0, ErrorKind::obstruction,
          "target derivative is not positive near x = " + std::to_string(x) + "; ln phi' is undefined");
  return std::log(d);
}

void check_unit_interval(const TargetSpec& phi) {
  require(phi.in_dim() == 1 && phi.out_dim == 1, ErrorKind::shape_mismatch, "rates need a 1D target");
  require(phi.domain.lo[0] == 0.0 && phi.domain.hi[0] == 1.0, ErrorKind::invalid_argument,
          "rates targets live on [0, 1]");
}

}  // namespace

LogDerivativeProfile profile_from_pieces(std::vector<double> breaks, std::vector<double> u) {
  require(!u.empty() && breaks.size() == u.size() + 1, ErrorKind::shape_mismatch,
          "need one more break than pieces");
  for (std::size_t j = 1; j < breaks.size(); ++j)
    require(breaks[j] > breaks[j - 1], ErrorKind::invalid_argument, "breaks must increase");
  require(all_finite(u), ErrorKind::invalid_argument, "profile values must be finite");
  LogDerivativeProfile p;
  p.breaks = std::move(breaks);
  p.u = std::move(u);
  fill_tv(p, p.u);
  for (double v : p.u) p.max_derivative = std::max(p.max_derivative, std::exp(v));
  return p;
}

LogDerivativeProfile tv_log_derivative(const TargetSpec& phi, std::size_t max_samples) {
  check_unit_interval(phi);
  if (phi.pwl) {
    std::vector<double> u;
    for (double s : phi.pwl->slopes()) {
      require(s > 0.0, ErrorKind::obstruction, "target has a non-increasing piece; ln phi' is undefined");
      u.push_back(std::log(s));
    }
    return profile_from_pieces(phi.pwl->xs, std::move(u));
  }
  std::size_t n = 1024;
  LogDerivativeProfile p;
  double prev_tv = -1.0;
  for (;;) {
    std::vector<double> nodes(n + 1);
    for (std::size_t i = 0; i <= n; ++i) nodes[i] = log_derivative(phi, static_cast<double>(i) / static_cast<double>(n));
    LogDerivativeProfile q;
    fill_tv(q, nodes);
    q.piecewise_constant = false;
    q.breaks.resize(n + 1);
    q.u.resize(n);
    for (std::size_t i = 0; i <= n; ++i) q.breaks[i] = static_cast<double>(i) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      q.u[i] = log_derivative(phi, (static_cast<double>(i) + 0.5) / static_cast<double>(n));
      q.quantization_error =
          std::max({q.quantization_error, std::abs(nodes[i] - q.u[i]), std::abs(nodes[i + 1] - q.u[i])});
    }
    for (double v : nodes) q.max_derivative = std::max(q.max_derivative, std::exp(v));
    for (double v : q.u) q.max_derivative = std::max(q.max_derivative, std::exp(v));
    p = std::move(q);
    if (std::abs(p.tv - prev_tv) <= 1e-10 * std::max(1.0, p.tv) || 2 * n > max_samples) break;
    prev_tv = p.tv;
    n *= 2;
  }
  return p;
}

LogDerivativeProfile quantize_profile(const TargetSpec& phi, std::size_t cells) {
  check_unit_interval(phi);
  require(cells >= 1, ErrorKind::invalid_argument, "need at least one cell");
  std::vector<double> breaks(cells + 1), u(cells);
  double qerr = 0.0;
  double maxd = 0.0;
  for (std::size_t i = 0; i <= cells; ++i) breaks[i] = static_cast<double>(i) / static_cast<double>(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    u[i] = log_derivative(phi, 0.5 * (breaks[i] + breaks[i + 1]));
    for (int k = 0; k <= 8; ++k) {
      const double x = breaks[i] + (breaks[i + 1] - breaks[i]) * k / 8.0;
      const double ux = log_derivative(phi, x);
      qerr = std::max(qerr, std::abs(ux - u[i]));
      maxd = std::max(maxd, std::exp(ux));
    }
  }
  LogDerivativeProfile p = profile_from_pieces(std::move(breaks), std::move(u));
  p.quantization_error = qerr;
  p.max_derivative = std::max(p.max_derivative, maxd);
  return p;
}

HeavisideDecomposition heaviside_decomposition(const LogDerivativeProfile& p, CompileMode mode) {
  require(p.piecewise_constant, ErrorKind::invalid_argument,
          "profile is not piecewise constant; quantize it before compiling");
  const std::size_t N = p.pieces();
  HeavisideDecomposition d;
  auto add = [&](double at, double h, JumpSide side) {
    if (h == 0.0) return;
    d.jumps.push_back({at, h, side});
    d.cost += std::abs(h);
  };
  if (mode != CompileMode::minimal) {
    add(p.breaks.front(), p.u.front(), JumpSide::right);
    for (std::size_t j = 1; j < N; ++j) add(p.breaks[j], p.u[j] - p.u[j - 1], JumpSide::right);
    if (mode == CompileMode::extended) add(p.breaks.back(), -p.u.back(), JumpSide::right);
    return d;
  }
  std::vector<double> jumps(N > 0 ? N - 1 : 0);
  double up = 0.0, down = 0.0;
  for (std::size_t j = 1; j < N; ++j) {
    jumps[j - 1] = p.u[j] - p.u[j - 1];
    (jumps[j - 1] > 0 ? up : down) += std::abs(jumps[j - 1]);
  }
  // part of each jump realized on the left; left parts sum to S
  const double S = std::clamp(-p.u.front(), -down, up);
  const double level = p.u.front() + S;
  double remaining = S;
  std::vector<double> left(jumps.size(), 0.0);
  for (std::size_t j = 0; j < jumps.size() && remaining != 0.0; ++j) {
    if (remaining > 0.0 && jumps[j] > 0.0) {
      left[j] = std::min(jumps[j], remaining);
    } else if (remaining < 0.0 && jumps[j] < 0.0) {
      left[j] = std::max(jumps[j], remaining);
    }
    remaining -= left[j];
  }
  add(p.breaks.front(), level, JumpSide::right);
  for (std::size_t j = 0; j < jumps.size(); ++j) {
    add(p.breaks[j + 1], jumps[j] - left[j], JumpSide::right);
    add(p.breaks[j + 1], -left[j], JumpSide::left);
  }
  return d;
}

VectorField heaviside_stage_field(double kink, JumpSide side, double height) {
  const double s = height >= 0.0 ? 1.0 : -1.0;
  if (side == JumpSide::right) return relu_field(Matrix(1, 1, s), Matrix(1, 1, 1.0), {-kink});
  return relu_field(Matrix(1, 1, -s), Matrix(1, 1, -1.0), {kink});
}

Schedule translation_gadget(double delta, double slack, double lo, double hi) {
  require(std::isfinite(delta), ErrorKind::invalid_argument, "shift must be finite");
  require(slack > 0.0 && std::isfinite(slack), ErrorKind::invalid_argument, "gadget needs a positive time slack");
  require(hi >= lo, ErrorKind::invalid_argument, "gadget interval must be ordered");
  Schedule s(1);
  if (delta == 0.0) return s;
  const double eps = slack / 2.0;
  const double spread = delta / std::expm1(eps);
  if (delta > 0.0) {
    const double k1 = lo - 1.0;
    const double k2 = k1 - spread;
    s.append(relu_field(Matrix(1, 1, -1.0), Matrix(1, 1, 1.0), {-k1}), eps);
    s.append(relu_field(Matrix(1, 1, 1.0), Matrix(1, 1, 1.0), {-k2}), eps);
  } else {
    const double k1 = hi + 1.0;
    const double k2 = k1 - spread;
    s.append(relu_field(Matrix(1, 1, 1.0), Matrix(1, 1, -1.0), {k1}), eps);
    s.append(relu_field(Matrix(1, 1, -1.0), Matrix(1, 1, -1.0), {k2}), eps);
  }
  return s;
}

CompiledFlow compile_heaviside_flow(const LogDerivativeProfile& p, double anchor, CompileMode mode, double slack) {
  require(std::isfinite(anchor), ErrorKind::invalid_argument, "anchor must be finite");
  CompiledFlow out;
  out.decomposition = heaviside_decomposition(p, mode);
  // innermost stage first: each kink is the image of its location under the stages already built
  for (const auto& j : out.decomposition.jumps) {
    const double kink = flow_eval(out.schedule, {j.location})[0];
    out.schedule.append(heaviside_stage_field(kink, j.side, j.height), std::abs(j.height));
  }
  const double at0 = flow_eval(out.schedule, {p.breaks.front()})[0];
  const double at1 = flow_eval(out.schedule, {p.breaks.back()})[0];
  const double delta = anchor - at0;
  if (delta != 0.0) {
    const Schedule g = translation_gadget(delta, slack, at0, at1);
    out.anchor_shift = delta;
    out.gadget_time = g.total_time();
    out.schedule.append(g);
  }
  return out;
}

double tube_min_tv(const std::vector<double>& u, double g, std::vector<double>* v) {
  require(!u.empty(), ErrorKind::invalid_argument, "empty profile");
  require(g >= 0.0, ErrorKind::invalid_argument, "tube radius must be nonnegative");
  const std::size_t N = u.size();
  std::vector<double> lo(N), hi(N);
  double cost = 0.0;
  lo[0] = u[0] - g;
  hi[0] = u[0] + g;
  for (std::size_t j = 1; j < N; ++j) {
    const double a = u[j] - g, b = u[j] + g;
    if (a <= hi[j - 1] && b >= lo[j - 1]) {
      lo[j] = std::max(a, lo[j - 1]);
      hi[j] = std::min(b, hi[j - 1]);
    } else if (a > hi[j - 1]) {
      cost += a - hi[j - 1];
      lo[j] = hi[j] = a;
    } else {
      cost += lo[j - 1] - b;
      lo[j] = hi[j] = b;
    }
  }
  if (v) {
    v->assign(N, 0.0);
    (*v)[N - 1] = std::clamp(u[N - 1], lo[N - 1], hi[N - 1]);
    for (std::size_t j = N - 1; j-- > 0;) (*v)[j] = std::clamp((*v)[j + 1], lo[j], hi[j]);
  }
  return cost;
}

GammaResult gamma_relaxed(const LogDerivativeProfile& p, double T) {
  require(T >= 0.0 && std::isfinite(T), ErrorKind::invalid_argument, "budget must be finite and nonnegative");
  GammaResult r;
  const std::vector<double>& u = p.u;
  const double qerr = p.quantization_error;
  double tv = 0.0;
  for (std::size_t j = 1; j < u.size(); ++j) tv += std::abs(u[j] - u[j - 1]);
  if (T >= tv) {
    r.gamma = qerr;
    r.exact = qerr == 0.0;
    r.method = "feasible";
    r.v = u;
    return r;
  }
  // collapse repeated values, then count direction changes
  std::vector<double> w;
  for (double x : u)
    if (w.empty() || x != w.back()) w.push_back(x);
  int turns = 0;
  for (std::size_t j = 2; j < w.size(); ++j)
    if ((w[j] - w[j - 1]) * (w[j - 1] - w[j - 2]) < 0.0) ++turns;
  const double umin = *std::min_element(u.begin(), u.end());
  const double umax = *std::max_element(u.begin(), u.end());
  if (turns == 0) {
    r.gamma = 0.5 * (tv - T);
    r.method = "monotone";
    r.v.resize(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) r.v[j] = std::clamp(u[j], umin + r.gamma, umax - r.gamma);
    r.exact = qerr == 0.0;
    r.gamma += qerr;
    return r;
  }
  if (turns == 1) {
    const double g = 0.25 * (tv - T);
    const bool peak = w[1] > w[0];
    const double extreme = peak ? umax : umin;
    const double leg1 = std::abs(extreme - w.front());
    const double leg2 = std::abs(extreme - w.back());
    if (g <= 0.5 * std::min(leg1, leg2)) {
      std::vector<double> v;
      const double cost = tube_min_tv(u, g, &v);
      if (cost <= T + 1e-12 * std::max(1.0, T)) {
        r.gamma = g + qerr;
        r.exact = qerr == 0.0;
        r.method = "unimodal";
        r.v = std::move(v);
        return r;
      }
    }
  }
  double lo = 0.0, hi = 0.5 * (umax - umin);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (tube_min_tv(u, mid) <= T ? hi : lo) = mid;
  }
  (void)tube_min_tv(u, hi, &r.v);
  r.gamma = hi + qerr;
  r.exact = false;
  r.method = "tube";
  return r;
}

namespace {

LogDerivativeProfile budget_profile(const TargetSpec& phi) {
  check_unit_interval(phi);
  if (phi.pwl) return tv_log_derivative(phi);
  return quantize_profile(phi, 1024);
}

}  // namespace

double budgeted_error_bound(const TargetSpec& phi, double T) {
  const LogDerivativeProfile p = budget_profile(phi);
  return std::expm1(gamma_relaxed(p, T).gamma) * p.max_derivative;
}

BudgetResult budgeted_approximation(const TargetSpec& phi, double T, std::size_t grid, double slack) {
  require(grid >= 2, ErrorKind::invalid_argument, "need at least two grid points");
  const LogDerivativeProfile p = budget_profile(phi);
  BudgetResult r;
  r.T = T;
  const GammaResult at_T = gamma_relaxed(p, T);
  r.gamma = at_T.gamma;
  r.gamma_exact = at_T.exact;
  r.bound = std::expm1(at_T.gamma) * p.max_derivative;
  // the anchor gadget needs `slack` of the budget
  const GammaResult used = gamma_relaxed(p, std::max(0.0, T - slack));
  const LogDerivativeProfile v = profile_from_pieces(p.breaks, used.v);
  const CompiledFlow c = compile_heaviside_flow(v, phi.scalar(0.0), CompileMode::minimal, slack);
  r.schedule = c.schedule;
  r.total_time = c.schedule.total_time();
  std::vector<Point> xs(grid);
  for (std::size_t i = 0; i < grid; ++i) xs[i] = {static_cast<double>(i) / static_cast<double>(grid - 1)};
  const auto ys = flow_eval_batch(r.schedule, xs);
  for (std::size_t i = 0; i < grid; ++i)
    r.measured_error = std::max(r.measured_error, std::abs(ys[i][0] - phi.scalar(xs[i][0])));
  return r;
}

}  // namespace flowmap
