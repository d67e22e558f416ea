#include <flowmap/selftest.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <random>

#include <flowmap/discretize.hpp>
#include <flowmap/families.hpp>
#include <flowmap/highd.hpp>
#include <flowmap/integrator.hpp>
#include <flowmap/oned.hpp>
#include <flowmap/rates.hpp>
#include <flowmap/splitting.hpp>
#include <flowmap/tensor.hpp>

namespace flowmap {

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

CriterionResult criterion(int id, const char* name) {
  CriterionResult r;
  r.id = id;
  r.name = name;
  return r;
}

std::string sci(double v) { return fmt("%.3e", v); }

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Runs one stage of s at a time; returns the states at every step boundary.
std::vector<std::vector<Point>> stage_states(const Schedule& s, const std::vector<Point>& xs) {
  std::vector<std::vector<Point>> out{xs};
  for (const auto& st : s.steps()) {
    Schedule one(s.dim());
    one.append(st.field, st.tau);
    out.push_back(flow_eval_batch(one, out.back()));
  }
  return out;
}

// Largest displacement of any coordinate other than the most displaced one, over all stages.
double off_axis_motion(const Schedule& s, const std::vector<Point>& xs) {
  const auto states = stage_states(s, xs);
  double worst = 0.0;
  for (std::size_t t = 1; t < states.size(); ++t) {
    std::vector<double> moved(s.dim(), 0.0);
    for (std::size_t j = 0; j < xs.size(); ++j)
      for (std::size_t k = 0; k < s.dim(); ++k)
        moved[k] = std::max(moved[k], std::abs(states[t][j][k] - states[t - 1][j][k]));
    const auto driven = std::max_element(moved.begin(), moved.end()) - moved.begin();
    for (std::size_t k = 0; k < s.dim(); ++k)
      if (static_cast<std::ptrdiff_t>(k) != driven) worst = std::max(worst, moved[k]);
  }
  return worst;
}

// s(z) = 1/2 min(max(|z| - 1, 0), 1), written out again here as the oracle
double soft_threshold(double z) { return 0.5 * std::min(std::max(std::abs(z) - 1.0, 0.0), 1.0); }

// sup over x of phi(x + r) - phi(x) on a fine grid of [0, 1]
double modulus_oracle(const TargetSpec& phi, double r) {
  constexpr int fine = 1 << 15;
  double w = 0.0;
  for (int i = 0; i <= fine; ++i) {
    const double x = static_cast<double>(i) / fine;
    const double y = std::min(1.0, x + r);
    w = std::max(w, std::abs(phi.scalar(y) - phi.scalar(x)));
  }
  return w;
}

CriterionResult c1_relu_flow(std::mt19937_64& rng) {
  CriterionResult r = criterion(1, "exact relu flow");
  r.time_limit = 1.0;
  std::uniform_real_distribution<double> base(-2.0, 2.0), gap(0.05, 2.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double x0 = base(rng);
    const double x1 = x0 + gap(rng);
    const double x2 = x1 + gap(rng);
    Schedule s(1);
    s.append(relu_field(Matrix(1, 1, -1.0), Matrix(1, 1, 1.0), {-x0}), std::log((x2 - x0) / (x1 - x0)));
    worst = std::max(worst, std::abs(flow_eval(s, {x2})[0] - x1));
  }
  r.passed = worst <= 1e-8;
  r.summary = "max |z(T) - x1| = " + sci(worst) + " over 100 triples (tol 1e-8)";
  r.detail = {{"max_error", worst}, {"triples", 100}};
  return r;
}

CriterionResult c2_sigmoid_bound() {
  CriterionResult r = criterion(2, "sigmoid bound");
  r.time_limit = 1.0;
  r.passed = true;
  json rows = json::array();
  for (auto [M, N] : {std::pair{25, 5}, {100, 10}, {400, 20}}) {
    double gap = 0.0;
    constexpr int points = 10000;
    for (int i = 0; i < points; ++i) {
      const double z = -5.0 + 10.0 * i / (points - 1);
      gap = std::max(gap, std::abs(soft_threshold(z) - sigmoid_smn(M, N, z)));
    }
    const double bound = 1.0 / N + 1.0 / (1.0 + std::exp(static_cast<double>(M) / N));
    r.passed = r.passed && gap < bound;
    rows.push_back({{"M", M}, {"N", N}, {"max_gap", gap}, {"bound", bound}});
    r.summary += (r.summary.empty() ? "" : ", ") + std::string("(") + std::to_string(M) + "," + std::to_string(N) +
                 ") " + sci(gap) + " < " + sci(bound);
  }
  r.detail = {{"rows", rows}};
  return r;
}

CriterionResult c3_splitting() {
  CriterionResult r = criterion(3, "splitting rate");
  r.time_limit = 5.0;
  const auto f = affine_field(Matrix(1, 1, 1.0), {0.0});
  const auto g = affine_field(Matrix(1, 1, 0.0), {1.0});
  const double x = 0.5;
  // averaged field (z + 1)/2
  const double exact = (x + 1.0) * std::exp(0.5) - 1.0;
  std::vector<double> Ns, errs;
  for (int N : {4, 8, 16, 32, 64}) {
    Ns.push_back(N);
    errs.push_back(std::abs(flow_eval(average_flow_schedule(f, g, 1.0, N), {x})[0] - exact));
  }
  const double slope = loglog_slope(Ns, errs);
  r.passed = slope <= -0.8;
  r.summary = "log-log slope " + fmt("%.4f", slope) + " (need <= -0.8), error at N=64 " + sci(errs.back());
  r.detail = {{"N", Ns}, {"errors", errs}, {"slope", slope}};
  return r;
}

CriterionResult c4_point_matching(std::mt19937_64& rng) {
  CriterionResult r = criterion(4, "1d point matching");
  r.time_limit = 30.0;
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  std::uniform_int_distribution<int> M(1, 6);
  const auto well = relu_well_1d(0.0, 1.0);
  double worst = 0.0;
  bool monotone = true;
  for (int trial = 0; trial < 20; ++trial) {
    const int m = M(rng);
    std::vector<double> xs(m), ys(m);
    for (auto& v : xs) v = U(rng);
    for (auto& v : ys) v = U(rng);
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    const PointMatchProblem p{xs, ys, well, 1e-6};
    const Schedule s = match_points(p);
    for (int k = 0; k < m; ++k) worst = std::max(worst, std::abs(flow_eval(s, {xs[k]})[0] - ys[k]));
    monotone = monotone && increasing_on_grid(s, xs.front() - 1.0, xs.back() + 1.0, 512);
  }
  r.passed = worst <= 1e-6 && monotone;
  r.summary = "max mismatch " + sci(worst) + " over 20 problems (tol 1e-6), monotone " + (monotone ? "yes" : "no");
  r.detail = {{"max_error", worst}, {"monotone", monotone}};
  return r;
}

CriterionResult c5_increasing() {
  CriterionResult r = criterion(5, "1d increasing approximation");
  r.time_limit = 60.0;
  r.passed = true;
  const auto well = relu_well_1d(0.0, 1.0);
  json rows = json::array();
  double worst_ratio = 0.0;
  for (const char* name : {"identity", "smooth1", "smooth2", "tanh", "pwl2", "pwl3", "pwl4", "pwl5"}) {
    const auto phi = builtin_target(name, 1);
    for (double eps : {1e-1, 1e-2}) {
      const auto a = approx_increasing(phi, eps, well);
      const double err = sup_error_1d(a.schedule, phi, 4096);
      const double omega = modulus_oracle(phi, a.mesh);
      const double bound = omega + a.ramp + a.point_tol;
      const bool ok = err <= eps && err <= bound;
      r.passed = r.passed && ok;
      worst_ratio = std::max(worst_ratio, err / eps);
      rows.push_back({{"target", name}, {"eps", eps}, {"error", err}, {"omega", omega}, {"bound", bound},
                      {"stages", a.schedule.size()}, {"passed", ok}});
    }
  }
  r.summary = "8 targets x 2 eps, worst error/eps " + fmt("%.4f", worst_ratio) + ", all within omega + stage tol: " +
              (r.passed ? "yes" : "no");
  r.detail = {{"rows", rows}};
  return r;
}

CriterionResult c6_rate_exactness(std::mt19937_64& rng) {
  CriterionResult r = criterion(6, "rate exactness");
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double worst_break = 0.0, worst_time = 0.0;
  for (int N : {2, 3, 5}) {
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> u(N);
      for (auto& v : u) v = U(rng);
      const auto phi = pwl_from_log_slopes("pwl", u, 0.0);
      // extended TV with zero extension: |u_0| + sum |jumps| + |u_last|
      double tv = std::abs(u.front()) + std::abs(u.back());
      for (int k = 1; k < N; ++k) tv += std::abs(u[k] - u[k - 1]);
      const auto c = compile_heaviside_flow(tv_log_derivative(phi), 0.0, CompileMode::extended);
      worst_time = std::max(worst_time, std::abs(c.schedule.total_time() - tv));
      for (double x : phi.pwl->xs) worst_break = std::max(worst_break, std::abs(flow_eval(c.schedule, {x})[0] - phi.scalar(x)));
    }
  }
  r.passed = worst_break <= 1e-6 && worst_time <= 1e-12;
  r.summary = "15 targets: breakpoint error " + sci(worst_break) + " (tol 1e-6), |time - tv| " + sci(worst_time) +
              " (tol 1e-12)";
  r.detail = {{"max_breakpoint_error", worst_break}, {"max_time_gap", worst_time}};
  return r;
}

CriterionResult c7_budgeted() {
  CriterionResult r = criterion(7, "budgeted error");
  const auto phi = builtin_target("pwl4", 1);
  const auto slopes = phi.pwl->slopes();
  const double dmax = *std::max_element(slopes.begin(), slopes.end());
  r.passed = true;
  json rows = json::array();
  for (double T : {0.25, 0.5, 0.75, 1.0}) {
    const double gamma = 0.5 * (1.0 - T);
    const double bound = std::expm1(gamma) * dmax;
    const auto b = budgeted_approximation(phi, T);
    const bool ok = T < 1.0 ? b.measured_error <= bound * 1.001 : b.measured_error <= 1e-5;
    r.passed = r.passed && ok && std::abs(b.gamma - gamma) <= 1e-12 && b.total_time <= T + 1e-12;
    rows.push_back({{"T", T}, {"gamma", gamma}, {"bound", bound}, {"measured_error", b.measured_error},
                    {"total_time", b.total_time}});
    r.summary += (r.summary.empty() ? "T=" : ", T=") + fmt("%.2f", T) + " " + sci(b.measured_error) + "/" + sci(bound);
  }
  r.detail = {{"rows", rows}};
  return r;
}

CriterionResult c8_pipeline(std::uint64_t seed) {
  CriterionResult r = criterion(8, "nd pipeline");
  r.time_limit = 600.0;
  r.passed = true;
  json rows = json::array();
  double worst = 0.0, slowest = 0.0;
  const auto well = relu_well_nd(2);
  for (const char* name : {"identity", "flip", "constant"}) {
    for (double p : {1.0, 2.0}) {
      LpOptions opt;
      opt.grid_N = 4;
      opt.mc_samples = 100000;
      opt.seed = seed;
      const auto t0 = Clock::now();
      const auto res = approximate_lp(builtin_target(name, 2), 0.5, p, well, opt);
      slowest = std::max(slowest, seconds_since(t0));
      const double e = res.report.measured_lp_error;
      worst = std::max(worst, e);
      r.passed = r.passed && e <= 0.5;
      rows.push_back({{"target", name}, {"p", p}, {"measured_lp_error", e}, {"mc_std_error", res.report.mc_std_error},
                      {"stages", res.schedule.size()}, {"alpha", res.report.alpha}});
    }
  }
  // every configuration has its own limit; the reported time is the slowest one
  r.summary = "6 configs, worst L^p error " + sci(worst) + " (eps 0.5)";
  r.detail = {{"rows", rows}};
  r.seconds = slowest;
  return r;
}

CriterionResult c9_separation(std::mt19937_64& rng) {
  CriterionResult r = criterion(9, "separation and transport");
  r.time_limit = 60.0;
  std::uniform_int_distribution<int> dim(2, 3), count(1, 5), lattice(0, 4);
  std::uniform_real_distribution<double> far(-1.0, 2.0);
  bool decreasing = true;
  double off_axis = 0.0, miss = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = dim(rng);
    const int m = count(rng);
    std::vector<Point> xs;
    while (static_cast<int>(xs.size()) < m) {
      Point x(n);
      for (auto& v : x) v = 0.25 * lattice(rng);
      if (std::find(xs.begin(), xs.end(), x) == xs.end()) xs.push_back(x);
    }
    const auto well = relu_well_nd(n);
    SeparationTrace tr;
    const Schedule sep = separate_points(xs, well, 0.1, &tr);
    for (std::size_t k = 1; k < tr.collisions.size(); ++k) decreasing = decreasing && tr.collisions[k] < tr.collisions[k - 1];
    decreasing = decreasing && tr.collisions.back() == 0;
    const auto moved = flow_eval_batch(sep, xs);
    std::vector<Point> ys(m, Point(n));
    for (auto& y : ys)
      for (auto& v : y) v = far(rng);
    const Schedule tp = transport_points(moved, ys, well, 1e-6);
    off_axis = std::max({off_axis, off_axis_motion(sep, xs), off_axis_motion(tp, moved)});
    const auto end = flow_eval_batch(tp, moved);
    for (int k = 0; k < m; ++k) miss = std::max(miss, dist2(end[k], ys[k]));
  }
  r.passed = decreasing && off_axis <= 1e-12 && miss <= 1e-6;
  r.summary = std::string("200 instances: collisions strictly decrease ") + (decreasing ? "yes" : "no") +
              ", off-axis motion " + sci(off_axis) + " (tol 1e-12), transport miss " + sci(miss);
  r.detail = {{"collisions_decrease", decreasing}, {"max_off_axis", off_axis}, {"max_transport_miss", miss}};
  return r;
}

CriterionResult c10_euler() {
  CriterionResult r = criterion(10, "euler bridge");
  const std::vector<std::size_t> S{64, 128, 256, 512};
  Schedule growth(1);
  growth.append(affine_field(Matrix(1, 1, 1.0), {0.0}), 1.0);
  Schedule mixed(2);
  mixed.append(activation_field(Activation::tanh, Matrix::from_rows({{1.0, 0.5}, {-0.3, 1.0}}),
                                Matrix::from_rows({{1.0, -1.0}, {0.5, 1.0}}), {0.1, -0.2}),
               1.0);
  mixed.append(activation_field(Activation::sigmoid, Matrix::from_rows({{-1.0, 0.2}, {0.4, 0.7}}),
                                Matrix::from_rows({{2.0, 0.0}, {0.0, -1.0}}), {0.0, 0.3}),
               0.5);
  Schedule smn(1);
  smn.append(sigmoid_smn_field(25, 5, 1), 1.0);
  json rows = json::array();
  r.passed = true;
  for (const auto& [name, s] : {std::pair<const char*, const Schedule*>{"linear", &growth}, {"tanh_sigmoid", &mixed},
                                {"sigmoid_smn", &smn}}) {
    const auto rep = truncation_slope(*s, S, probe_grid(s->dim(), s->dim() == 1 ? 65 : 17, -1.0, 1.0));
    const bool ok = !rep.degenerate && rep.slope >= -1.25 && rep.slope <= -0.75;
    r.passed = r.passed && ok;
    rows.push_back({{"schedule", name}, {"report", slope_report_to_json(rep)}});
    r.summary += std::string(r.summary.empty() ? "" : ", ") + name + " " + fmt("%.3f", rep.slope);
  }
  // point matching network at S = 1024 against twice the continuous tolerance
  const PointMatchProblem p{{0.1, 0.5, 0.9}, {0.3, 1.2, 1.5}, relu_well_1d(-0.5, -0.25), 0.05};
  const auto net = euler_discretize(match_points(p), 1024);
  double miss = 0.0;
  for (std::size_t k = 0; k < p.xs.size(); ++k) miss = std::max(miss, std::abs(net.forward({p.xs[k]})[0] - p.ys[k]));
  r.passed = r.passed && miss <= 2.0 * p.eps;
  r.summary += "; network miss " + sci(miss) + " (tol " + sci(2.0 * p.eps) + ")";
  r.detail = {{"slopes", rows}, {"network_miss", miss}, {"continuous_eps", p.eps}};
  return r;
}

CriterionResult c11_tensor(std::mt19937_64& rng) {
  CriterionResult r = criterion(11, "tensor shear");
  r.time_limit = 60.0;
  std::uniform_real_distribution<double> U(-1.0, 1.0), unit(0.0, 1.0), tau(0.1, 1.0);
  std::uniform_int_distribution<int> coord(0, 2);
  double drift = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Schedule g(1);
    for (int k = 0; k < 3; ++k) g.append(relu_field(Matrix(1, 1, U(rng)), Matrix(1, 1, U(rng)), {U(rng)}), tau(rng));
    const std::size_t i = coord(rng);
    std::size_t j = coord(rng);
    if (j == i) j = (i + 1) % 3;
    const Schedule c = comove_schedule(g, i, j, 3);
    std::vector<Point> xs(5, Point(3));
    for (auto& x : xs)
      for (auto& v : x) v = U(rng);
    auto cur = xs;
    for (const auto& st : c.steps()) {
      for (double frac : {0.5, 1.0}) {
        for (std::size_t k = 0; k < xs.size(); ++k) {
          const Point y = flow_step(st.field, frac * st.tau, cur[k]);
          drift = std::max(drift, std::abs((y[i] - y[j]) - (xs[k][i] - xs[k][j])));
          if (frac == 1.0) cur[k] = y;
        }
      }
    }
  }
  double miss = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Point> xs(3), ys(3);
    for (auto& x : xs) x = {unit(rng), unit(rng)};
    for (auto& y : ys) y = {U(rng), U(rng)};
    const auto end = flow_eval_batch(tensor_transport(xs, ys, 1e-3), xs);
    for (int k = 0; k < 3; ++k) miss = std::max(miss, dist2(end[k], ys[k]));
  }
  r.passed = drift <= 1e-9 && miss <= 1e-3;
  r.summary = "co-move drift " + sci(drift) + " (tol 1e-9), m=3 transport miss " + sci(miss) + " (tol 1e-3)";
  r.detail = {{"max_drift", drift}, {"max_transport_miss", miss}};
  return r;
}

template <class F>
CriterionResult timed(int id, const char* name, F&& f) {
  const auto t0 = Clock::now();
  CriterionResult r;
  try {
    r = f();
  } catch (const std::exception& e) {
    r = criterion(id, name);
    r.summary = std::string("error: ") + e.what();
  }
  const double elapsed = seconds_since(t0);
  if (r.seconds == 0.0) r.seconds = elapsed;
  if (r.time_limit > 0.0 && r.seconds >= r.time_limit) r.passed = false;
  return r;
}

std::vector<CriterionResult> run_criteria(std::uint64_t seed, const std::function<void(const CriterionResult&)>& cb) {
  std::vector<CriterionResult> out;
  auto add = [&](CriterionResult r) {
    if (cb) cb(r);
    out.push_back(std::move(r));
  };
  // each criterion draws from its own stream so that one change does not shift the others
  auto rng = [seed](int id) { return std::mt19937_64(seed * 1000003u + static_cast<std::uint64_t>(id)); };
  add(timed(1, "exact relu flow", [&] { auto g = rng(1); return c1_relu_flow(g); }));
  add(timed(2, "sigmoid bound", [] { return c2_sigmoid_bound(); }));
  add(timed(3, "splitting rate", [] { return c3_splitting(); }));
  add(timed(4, "1d point matching", [&] { auto g = rng(4); return c4_point_matching(g); }));
  add(timed(5, "1d increasing approximation", [] { return c5_increasing(); }));
  add(timed(6, "rate exactness", [&] { auto g = rng(6); return c6_rate_exactness(g); }));
  add(timed(7, "budgeted error", [] { return c7_budgeted(); }));
  add(timed(8, "nd pipeline", [&] { return c8_pipeline(seed); }));
  add(timed(9, "separation and transport", [&] { auto g = rng(9); return c9_separation(g); }));
  add(timed(10, "euler bridge", [] { return c10_euler(); }));
  add(timed(11, "tensor shear", [&] { auto g = rng(11); return c11_tensor(g); }));
  return out;
}

}  // namespace

bool SelftestResult::all_passed() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const CriterionResult& r) { return r.passed; });
}

json selftest_report(const std::vector<CriterionResult>& criteria, std::uint64_t seed) {
  json list = json::array();
  for (const auto& r : criteria)
    list.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"summary", r.summary}, {"detail", r.detail}});
  return {{"seed", seed}, {"criteria", std::move(list)}};
}

std::string format_line(const CriterionResult& r) {
  std::string line = std::string(r.passed ? "PASS" : "FAIL") + (r.id < 10 ? "  " : " ") + std::to_string(r.id) + " " +
                     r.name + ": " + r.summary + " [" + fmt("%.2f", r.seconds) + " s";
  if (r.time_limit > 0.0) line += ", limit " + fmt("%.0f", r.time_limit) + " s";
  return line + "]";
}

SelftestResult run_selftest(const SelftestOptions& opt) {
  SelftestResult res;
  res.criteria = run_criteria(opt.seed, opt.on_result);
  res.report = selftest_report(res.criteria, opt.seed);
  if (!opt.check_determinism) return res;

  const auto t0 = Clock::now();
  CriterionResult det = criterion(12, "determinism");
  try {
    const auto again = selftest_report(run_criteria(opt.seed, nullptr), opt.seed);
    const std::string a = res.report.dump(2), b = again.dump(2);
    det.passed = a == b;
    det.summary = "second run report " + std::string(det.passed ? "byte-identical" : "differs") + " (" +
                  std::to_string(a.size()) + " bytes)";
    det.detail = {{"identical", det.passed}, {"bytes", a.size()}};
  } catch (const std::exception& e) {
    det.summary = std::string("error: ") + e.what();
  }
  det.seconds = seconds_since(t0);
  if (opt.on_result) opt.on_result(det);
  res.criteria.push_back(std::move(det));
  return res;
}

}  // namespace flowmap
