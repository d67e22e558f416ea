#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>

#include <flowmap/discretize.hpp>
#include <flowmap/errors.hpp>
#include <flowmap/families.hpp>
#include <flowmap/highd.hpp>
#include <flowmap/integrator.hpp>
#include <flowmap/oned.hpp>
#include <flowmap/rates.hpp>
#include <flowmap/selftest.hpp>
#include <flowmap/terminal.hpp>
#include <flowmap/well.hpp>

namespace flowmap::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::invalid_argument, path + ": " + e.what());
  }
}

WellFunction resolve_well(const std::string& name) {
  if (name == "relu") return relu_well_1d(0.0, 1.0);
  if (name == "block") return block_well(Activation::relu, 0.5, 1.5, 1);
  if (name == "sigmoid") return sigmoid_well(400, 20, 1);
  fail(ErrorKind::invalid_argument, "unknown well '" + name + "' (relu, block, sigmoid)");
}

void stamp(json& report, const Common& c, double seconds) {
  if (c.wall_time) report["wall_time"] = seconds;
}

}  // namespace

RunDir::RunDir(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) fail(ErrorKind::io, "cannot create " + dir_.string() + ": " + ec.message());
}

void RunDir::write_json(const std::string& name, const json& j) const {
  std::ofstream out(dir_ / name, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + (dir_ / name).string());
  out << j.dump(2) << '\n';
}

void RunDir::write_csv(const std::string& name, const std::vector<CsvRow>& rows) const {
  std::ofstream out(dir_ / name, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + (dir_ / name).string());
  for (const auto& r : rows) write_csv_row(out, r);
}

int run_approx1d(const Common& c, const Approx1dArgs& a) {
  const RunDir dir(c.out);
  dir.write_json("config.json", {{"command", "approx1d"}, {"target", a.target}, {"eps", a.eps}, {"well", a.well}});
  const auto t0 = Clock::now();
  const TargetSpec phi = resolve_target(a.target, 1);
  const WellFunction well = resolve_well(a.well);
  const ApproxIncreasing r = approx_increasing(phi, a.eps, well);
  const double err = sup_error_1d(r.schedule, phi, 1u << 14);
  const Box& d = phi.domain;
  json report{{"target", phi.name},
              {"eps", a.eps},
              {"measured_sup_error", err},
              {"omega", r.omega},
              {"mesh", r.mesh},
              {"point_tol", r.point_tol},
              {"ramp", r.ramp},
              {"stages", r.schedule.size()},
              {"total_time_T", r.schedule.total_time()},
              {"increasing", increasing_on_grid(r.schedule, d.lo[0], d.hi[0], 4096)}};
  stamp(report, c, seconds_since(t0));
  dir.write_json("schedule.json", schedule_to_json(r.schedule));
  dir.write_json("report.json", report);
  std::printf("measured_sup_error %.6e (eps %.3e), %zu stages\n", err, a.eps, r.schedule.size());
  return err <= a.eps ? 0 : 1;
}

int run_rate(const Common& c, const RateArgs& a) {
  const RunDir dir(c.out);
  dir.write_json("config.json", {{"command", "rate"}, {"target", a.target}, {"budgets", a.budgets}, {"grid", a.grid}});
  const auto t0 = Clock::now();
  const TargetSpec phi = resolve_target(a.target, 1);
  const LogDerivativeProfile prof = tv_log_derivative(phi);
  std::vector<CsvRow> rows{{"T", "gamma", "bound", "measured_error"}};
  json sweep = json::array();
  bool ok = true;
  for (double T : a.budgets) {
    const BudgetResult b = budgeted_approximation(phi, T, a.grid);
    rows.push_back({format_number(T), format_number(b.gamma), format_number(b.bound), format_number(b.measured_error)});
    sweep.push_back({{"T", T},
                     {"gamma", b.gamma},
                     {"gamma_exact", b.gamma_exact},
                     {"bound", b.bound},
                     {"measured_error", b.measured_error},
                     {"total_time", b.total_time},
                     {"stages", b.schedule.size()}});
    ok = ok && b.measured_error <= b.bound * 1.001 + 1e-5;
  }
  json report{{"target", phi.name}, {"tv", prof.tv}, {"tv_interior", prof.tv_interior}, {"sweep", sweep}};
  stamp(report, c, seconds_since(t0));
  dir.write_csv("rate.csv", rows);
  dir.write_json("report.json", report);
  for (const auto& r : rows) std::printf("%s,%s,%s,%s\n", r[0].c_str(), r[1].c_str(), r[2].c_str(), r[3].c_str());
  return ok ? 0 : 1;
}

int run_approxnd(const Common& c, const ApproxNdArgs& a, bool tensor) {
  const RunDir dir(c.out);
  json cfg{{"command", tensor ? "tensor" : "approxnd"},
           {"target", a.target},
           {"n", a.n},
           {"p", a.p},
           {"eps", a.eps},
           {"grid_N", a.grid_N},
           {"max_N", a.max_N},
           {"alpha", a.alpha ? json(*a.alpha) : json(nullptr)},
           {"samples", a.samples},
           {"seed", c.seed},
           {"terminal", a.terminal}};
  dir.write_json("config.json", cfg);
  const TargetSpec F = resolve_target(a.target, a.n);
  LpOptions opt;
  opt.grid_N = a.grid_N;
  opt.max_N = a.max_N;
  opt.backend = tensor ? Backend::tensor : Backend::well;
  opt.mc_samples = a.samples;
  opt.seed = c.seed;
  opt.alpha = a.alpha;
  if (!a.terminal.empty()) opt.terminal = terminal_from_json(read_json_file(a.terminal));
  const LpResult r = approximate_lp(F, a.eps, a.p, relu_well_nd(a.n), opt);
  dir.write_json("schedule.json", schedule_to_json(r.schedule));
  dir.write_json("report.json", report_to_json(r.report, c.wall_time));
  std::printf("measured_lp_error %.6e (eps %.3e, N %zu, alpha %.6f), %zu stages\n", r.report.measured_lp_error, a.eps,
              r.report.N, r.report.alpha, r.schedule.size());
  return r.report.measured_lp_error <= a.eps ? 0 : 1;
}

int run_discretize(const Common& c, const DiscretizeArgs& a) {
  const RunDir dir(c.out);
  dir.write_json("config.json",
                 {{"command", "discretize"}, {"schedule", a.schedule}, {"layers", a.layers}, {"slopes", a.slopes}});
  const auto t0 = Clock::now();
  const Schedule s = schedule_from_json(read_json_file(a.schedule));
  const ResNetExport net = euler_discretize(s, a.layers > 0 ? a.layers : std::max<std::size_t>(1024, s.size()));
  std::vector<std::size_t> S_list = a.slopes;
  if (S_list.empty()) {
    std::size_t first = 64;
    while (first < s.size()) first *= 2;
    for (int k = 0; k < 4; ++k) S_list.push_back(first << k);
  }
  const std::size_t per_axis = s.dim() == 1 ? 257 : s.dim() == 2 ? 33 : s.dim() == 3 ? 9 : 3;
  const auto probes = probe_grid(s.dim(), per_axis);
  const SlopeReport rep = truncation_slope(s, S_list, probes);
  std::vector<CsvRow> rows{{"S", "sup_error"}};
  for (std::size_t i = 0; i < rep.S_list.size(); ++i)
    rows.push_back({std::to_string(rep.S_list[i]), format_number(rep.errors[i])});
  const auto exact = flow_eval_batch(s, probes);
  const auto out = net.forward_batch(probes);
  double gap = 0.0;
  for (std::size_t i = 0; i < probes.size(); ++i) gap = std::max(gap, dist2(exact[i], out[i]));
  json report{{"S", net.S()}, {"source_T", net.source_T}, {"network_sup_error", gap},
              {"probes", probes.size()}, {"truncation", slope_report_to_json(rep)}};
  stamp(report, c, seconds_since(t0));
  dir.write_json("resnet.json", resnet_to_json(net));
  dir.write_csv("truncation.csv", rows);
  dir.write_json("report.json", report);
  std::printf("S %zu: network sup error %.6e; truncation slope %s\n", net.S(), gap,
              rep.degenerate ? "degenerate" : std::to_string(rep.slope).c_str());
  return 0;
}

int run_verify(const Common& c, const VerifyArgs& a) {
  const RunDir dir(c.out);
  dir.write_json("config.json", {{"command", "verify"},
                                 {"schedule", a.schedule},
                                 {"target", a.target},
                                 {"p", a.p},
                                 {"samples", a.samples},
                                 {"seed", c.seed}});
  const auto t0 = Clock::now();
  const Schedule s = schedule_from_json(read_json_file(a.schedule));
  const std::size_t n = s.dim();
  const TargetSpec F = resolve_target(a.target, n);
  require(F.in_dim() == n, ErrorKind::shape_mismatch, "target and schedule dimensions differ");
  json report{{"dim", n}, {"target", F.name}, {"stages", s.size()}, {"total_time_T", s.total_time()}};
  if (n == 1 && F.out_dim == 1) {
    const Box& d = F.domain;
    report["sup_error"] = sup_error_1d(s, F, a.grid);
    report["increasing"] = increasing_on_grid(s, d.lo[0], d.hi[0], 4096);
  } else {
    const LpEstimate e = compose_and_measure(TerminalMap::identity(n), s, F, a.p, a.samples, c.seed);
    report["lp_error"] = {{"p", a.p}, {"value", e.value}, {"std_error", e.std_error}, {"samples", e.samples}};
    report["increasing"] = nullptr;
  }
  std::vector<Point> pts = probe_grid(n, n <= 2 ? 9 : 4);
  for (auto& x : pts)
    for (std::size_t k = 0; k < n; ++k) x[k] = F.domain.lo[k] + (F.domain.hi[k] - F.domain.lo[k]) * x[k];
  const auto signs = jacobian_sign_check(s, pts, 1e-6);
  std::size_t pos = 0, neg = 0, ind = 0;
  for (const auto& j : signs) {
    if (j.sign == OrientationSign::positive) ++pos;
    else if (j.sign == OrientationSign::negative) ++neg;
    else ++ind;
  }
  report["jacobian"] = {{"points", signs.size()}, {"positive", pos}, {"negative", neg}, {"indeterminate", ind}};
  stamp(report, c, seconds_since(t0));
  dir.write_json("report.json", report);
  std::printf("%s\n", report.dump().c_str());
  return 0;
}

int run_selftest(const Common& c) {
  const RunDir dir(c.out);
  dir.write_json("config.json", {{"command", "selftest"}, {"seed", c.seed}});
  SelftestOptions opt;
  opt.seed = c.seed;
  opt.on_result = [](const CriterionResult& r) {
    std::printf("%s\n", format_line(r).c_str());
    std::fflush(stdout);
  };
  const SelftestResult res = flowmap::run_selftest(opt);
  json report = res.report;
  report["criteria"].push_back({{"id", 12}, {"name", res.criteria.back().name}, {"passed", res.criteria.back().passed},
                                {"summary", res.criteria.back().summary}, {"detail", res.criteria.back().detail}});
  std::vector<CsvRow> rows{{"id", "name", "passed", "summary"}};
  for (const auto& r : res.criteria) rows.push_back({std::to_string(r.id), r.name, r.passed ? "true" : "false", r.summary});
  dir.write_json("selftest.json", report);
  dir.write_csv("selftest.csv", rows);
  return res.all_passed() ? 0 : 1;
}

}  // namespace flowmap::cli
