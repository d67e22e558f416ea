#include <doctest.h>

#include <cmath>
#include <random>

#include <flowmap/errors.hpp>
#include <flowmap/rates.hpp>
#include <flowmap/target.hpp>

using namespace flowmap;

namespace {

// breakpoint values by integrating exp(u) piece by piece
std::vector<double> cumulative(const std::vector<double>& u) {
  std::vector<double> y{0.0};
  const double h = 1.0 / static_cast<double>(u.size());
  for (double v : u) y.push_back(y.back() + h * std::exp(v));
  return y;
}

double slope_at(const Schedule& s, double x) {
  const double h = 1e-4;
  return (flow_eval(s, {x + h})[0] - flow_eval(s, {x - h})[0]) / (2 * h);
}

}  // namespace

TEST_CASE("identity has a flat profile") {
  const auto p = tv_log_derivative(builtin_target("identity"));
  CHECK(p.tv == doctest::Approx(0.0).epsilon(1e-9));
  const auto c = compile_heaviside_flow(profile_from_pieces({0.0, 1.0}, {0.0}), 0.0);
  CHECK(c.schedule.empty());
}

TEST_CASE("boundary terms enter the total variation") {
  const auto phi = pwl_target("two", PiecewiseLinear{{0.0, 0.5, 1.0}, {0.0, 1.0, 1.5}});
  const auto p = tv_log_derivative(phi);
  CHECK(p.tv == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-14));
  CHECK(p.tv_interior == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(p.max_derivative == doctest::Approx(2.0));
}

TEST_CASE("sampled total variation of a smooth target") {
  const auto p = tv_log_derivative(builtin_target("smooth2"));
  // phi' = x + 1/2
  double oracle = 0.0;
  const int M = 1000000;
  double prev = std::log(0.5);
  for (int i = 1; i <= M; ++i) {
    const double cur = std::log(static_cast<double>(i) / M + 0.5);
    oracle += std::abs(cur - prev);
    prev = cur;
  }
  CHECK(std::abs(p.tv_interior - oracle) <= 1e-4);
  CHECK(std::abs(p.tv - (oracle + std::log(2.0) + std::log(1.5))) <= 1e-4);
  CHECK_FALSE(p.piecewise_constant);
}

TEST_CASE("decreasing pieces are rejected") {
  CHECK_THROWS_AS((void)tv_log_derivative(builtin_target("decreasing")), FlowmapError);
  CHECK_THROWS_AS((void)heaviside_decomposition(tv_log_derivative(builtin_target("smooth2")), CompileMode::extended),
                  FlowmapError);
}

TEST_CASE("single jump compiles to one stage") {
  const auto p = profile_from_pieces({0.0, 0.5, 1.0}, {0.0, std::log(2.0)});
  const auto c = compile_heaviside_flow(p, 0.0, CompileMode::minimal);
  REQUIRE(c.schedule.size() == 1);
  CHECK(c.schedule.total_time() == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  for (double x : {0.1, 0.3, 0.45}) CHECK(slope_at(c.schedule, x) == doctest::Approx(1.0).epsilon(1e-9));
  for (double x : {0.55, 0.7, 0.9}) CHECK(slope_at(c.schedule, x) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("extended mode also closes the profile at 1") {
  const auto p = profile_from_pieces({0.0, 0.5, 1.0}, {0.0, std::log(2.0)});
  const auto c = compile_heaviside_flow(p, 0.0);
  CHECK(c.schedule.size() == 2);
  CHECK(c.schedule.total_time() == doctest::Approx(p.tv).epsilon(1e-15));
  CHECK(slope_at(c.schedule, 0.75) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(slope_at(c.schedule, 1.5) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("left and right jumps move slopes on their side") {
  Schedule s(1);
  s.append(heaviside_stage_field(0.5, JumpSide::right, -0.7), 0.7);
  CHECK(slope_at(s, 0.8) == doctest::Approx(std::exp(-0.7)).epsilon(1e-9));
  CHECK(slope_at(s, 0.2) == doctest::Approx(1.0).epsilon(1e-9));
  Schedule l(1);
  l.append(heaviside_stage_field(0.5, JumpSide::left, 0.4), 0.4);
  CHECK(slope_at(l, 0.2) == doctest::Approx(std::exp(0.4)).epsilon(1e-9));
  CHECK(slope_at(l, 0.8) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("piecewise linear targets are reproduced at the breakpoints") {
  const std::vector<double> u{-0.5, -0.2, 0.1, 0.5};
  const auto expected = cumulative(u);
  const auto p = tv_log_derivative(pwl_from_log_slopes("pwl", u));
  const auto c = compile_heaviside_flow(p, 0.0);
  CHECK(c.gadget_time == 0.0);
  CHECK(std::abs(c.schedule.total_time() - p.tv) <= 1e-12);
  for (std::size_t k = 0; k < expected.size(); ++k)
    CHECK(std::abs(flow_eval(c.schedule, {p.breaks[k]})[0] - expected[k]) <= 1e-9);

  // the minimal mode spends only the interior variation plus the anchor
  const auto m = compile_heaviside_flow(p, 0.0, CompileMode::minimal, 1e-3);
  CHECK(m.decomposition.cost == doctest::Approx(p.tv_interior).epsilon(1e-12));
  CHECK(m.schedule.total_time() <= p.tv_interior + 1e-3 + 1e-12);
  for (std::size_t k = 0; k < expected.size(); ++k)
    CHECK(std::abs(flow_eval(m.schedule, {p.breaks[k]})[0] - expected[k]) <= 1e-8);
}

TEST_CASE("random profiles in both modes") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> u(2 + trial % 5);
    for (double& v : u) v = U(rng);
    const auto expected = cumulative(u);
    const auto p = tv_log_derivative(pwl_from_log_slopes("r", u, 0.25));
    for (auto mode : {CompileMode::extended, CompileMode::minimal}) {
      const auto c = compile_heaviside_flow(p, 0.25, mode, 1e-2);
      for (std::size_t k = 0; k < expected.size(); ++k)
        CHECK(std::abs(flow_eval(c.schedule, {p.breaks[k]})[0] - (0.25 + expected[k])) <= 1e-8);
    }
  }
}

TEST_CASE("translation gadget") {
  CHECK(translation_gadget(0.0, 0.01).empty());
  for (auto [delta, slack] : {std::pair{1.0, 0.01}, std::pair{-2.5, 0.02}}) {
    const auto g = translation_gadget(delta, slack);
    CHECK(g.total_time() <= slack + 1e-15);
    for (int i = 0; i <= 100; ++i) {
      const double x = i / 100.0;
      CHECK(std::abs(flow_eval(g, {x})[0] - (x + delta)) <= 1e-9);
    }
  }
  CHECK_THROWS_AS((void)translation_gadget(1.0, 0.0), FlowmapError);
}

TEST_CASE("relaxed budget closed forms") {
  const auto inc = profile_from_pieces({0.0, 0.25, 0.5, 1.0}, {0.0, 0.5, 1.0});
  CHECK(gamma_relaxed(inc, 0.4).gamma == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(gamma_relaxed(inc, 0.4).exact);
  CHECK(gamma_relaxed(inc, 2.0).gamma == 0.0);

  const auto bump = profile_from_pieces({0.0, 0.5, 1.0, 1.5}, {0.0, 1.0, 0.0});
  const auto g = gamma_relaxed(bump, 1.0);
  CHECK(g.gamma == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(g.method == "unimodal");

  // the returned profile is feasible
  for (const auto* p : {&inc, &bump}) {
    const auto r = gamma_relaxed(*p, 0.5);
    double tv = 0.0, dev = 0.0;
    for (std::size_t j = 0; j < r.v.size(); ++j) {
      dev = std::max(dev, std::abs(r.v[j] - p->u[j]));
      if (j) tv += std::abs(r.v[j] - r.v[j - 1]);
    }
    CHECK(tv <= 0.5 + 1e-12);
    CHECK(dev <= r.gamma + 1e-12);
  }
}

TEST_CASE("general profiles give a monotone bound") {
  const auto p = profile_from_pieces({0.0, 0.2, 0.4, 0.6, 0.8, 1.0}, {0.0, 1.0, 0.2, 0.9, -0.3});
  double prev = 1e300;
  for (double T = 0.0; T <= 3.5; T += 0.25) {
    const auto r = gamma_relaxed(p, T);
    CHECK(r.gamma <= prev + 1e-12);
    prev = r.gamma;
    if (r.method == "tube") CHECK_FALSE(r.exact);
    CHECK(tube_min_tv(p.u, r.gamma) <= T + 1e-9);
  }
  CHECK(gamma_relaxed(p, 0.0).gamma == doctest::Approx(0.65).epsilon(1e-9));
}

TEST_CASE("budgeted error bound") {
  CHECK(budgeted_error_bound(builtin_target("identity"), 0.3) <= 1e-9);
  // u = x on [0, 1]: increasing, tv 1, sup phi' = e
  TargetSpec phi;
  phi.name = "exp";
  phi.domain = Box{{0.0}, {1.0}};
  phi.out_dim = 1;
  phi.fn = [](std::span<const double> x, std::span<double> y) { y[0] = std::exp(x[0]) - 1.0; };
  const auto p = quantize_profile(phi, 1024);
  CHECK(p.max_derivative == doctest::Approx(std::exp(1.0)).epsilon(1e-6));
  // quantization can only loosen the bound
  const double b = budgeted_error_bound(phi, 0.4);
  CHECK(b >= std::expm1(0.3) * std::exp(1.0));
  CHECK(b == doctest::Approx(std::expm1(0.3) * std::exp(1.0)).epsilon(2e-3));
  CHECK(budgeted_error_bound(phi, 2.0) <= 2e-3);
}

TEST_CASE("budgeted approximation stays under the bound") {
  const auto phi = builtin_target("pwl4");
  for (double T : {0.25, 0.5, 0.75, 1.0}) {
    const auto r = budgeted_approximation(phi, T);
    CHECK(r.gamma == doctest::Approx(std::max(0.0, (1.0 - T) / 2)).epsilon(1e-12));
    CHECK(r.total_time <= T + 1e-12);
    CHECK(r.measured_error <= r.bound * 1.001 + 1e-5);
  }
  CHECK(budgeted_approximation(phi, 1.0).measured_error <= 1e-5);
}
