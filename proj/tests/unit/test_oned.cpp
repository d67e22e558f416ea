#include <doctest.h>

#include <cmath>
#include <random>

#include <flowmap/errors.hpp>
#include <flowmap/integrator.hpp>
#include <flowmap/oned.hpp>

using namespace flowmap;

namespace {

IntegratorConfig rk45() {
  IntegratorConfig c;
  c.method = Method::rk45_adaptive;
  c.rtol = 1e-12;
  c.atol = 1e-13;
  return c;
}

}  // namespace

TEST_CASE("transport by a relu drive") {
  // -relu(z) drive: the well zero set [-1, 0] is to the left
  const auto w = relu_well_1d(-1.0, 0.0);
  const Transport t = transport_time(w, 2.0, 1.0);
  CHECK(t.sign == -1);
  CHECK(t.tau == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(transport_time(w, 1.5, 1.5).tau == 0.0);
  CHECK_THROWS_AS((void)transport_time(w, -0.5, 1.0), FlowmapError);
  CHECK_THROWS_AS((void)transport_time(w, -2.0, 1.0), FlowmapError);
}

TEST_CASE("transport by a sigmoid well") {
  const auto w = sigmoid_well(100, 10, 1);
  const Transport t = transport_time(w, 3.0, 2.0, 1e-10);
  Schedule s(1);
  s.append(t.sign > 0 ? w.field : negated(w.field), t.tau);
  CHECK(flow_eval(s, {3.0})[0] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(flow_eval(s, {3.0}, rk45())[0] == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("single point base case") {
  PointMatchProblem p{{2.0}, {5.0}, relu_well_1d(0.0, 1.0), 1e-6};
  const auto s = match_points(p);
  CHECK(s.size() == 1);
  CHECK(flow_eval(s, {2.0})[0] == doctest::Approx(5.0).epsilon(1e-9));
}

TEST_CASE("already matched points give the identity") {
  PointMatchProblem p{{0.0, 1.0, 2.0}, {0.0, 1.0, 2.0}, relu_well_1d(0.0, 1.0), 1e-6};
  CHECK(match_points(p).empty());
}

TEST_CASE("five point example") {
  PointMatchProblem p{{1, 2, 3, 4, 5}, {1.5, 1.6, 3.0, 4.5, 9.0}, relu_well_1d(0.0, 1.0), 1e-6};
  MatchTrace trace;
  const auto s = match_points(p, &trace);
  for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(flow_eval(s, {p.xs[k]})[0] - p.ys[k]) <= 1e-6);
  for (double d : trace.drift) CHECK(d <= 1e-6 / 50);
  CHECK(increasing_on_grid(s, 0.0, 6.0, 512));
  // independent numeric check of the closed forms
  for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(flow_eval(s, {p.xs[k]}, rk45())[0] - p.ys[k]) <= 1e-6);
}

TEST_CASE("random problems with different wells") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const std::vector<WellFunction> wells{relu_well_1d(0.0, 1.0), block_well(Activation::relu, 0.5, 1.5, 1),
                                        sigmoid_well(400, 20, 1)};
  for (const auto& w : wells) {
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<double> xs(4), ys(4);
      for (auto& v : xs) v = u(rng);
      for (auto& v : ys) v = u(rng);
      std::sort(xs.begin(), xs.end());
      std::sort(ys.begin(), ys.end());
      PointMatchProblem p{xs, ys, w, 1e-6};
      const auto s = match_points(p);
      for (std::size_t k = 0; k < xs.size(); ++k)
        CHECK_MESSAGE(std::abs(flow_eval(s, {xs[k]})[0] - ys[k]) <= 1e-6, w.kind);
    }
  }
}

TEST_CASE("problem validation") {
  PointMatchProblem p{{1.0, 0.5}, {0.0, 1.0}, relu_well_1d(0.0, 1.0), 1e-6};
  CHECK_THROWS_AS((void)match_points(p), FlowmapError);
}

TEST_CASE("approximating increasing targets") {
  const auto well = relu_well_1d(0.0, 1.0);
  for (const char* name : {"identity", "smooth1", "smooth2"}) {
    const auto phi = builtin_target(name, 1);
    for (double eps : {1e-1, 1e-2}) {
      const auto r = approx_increasing(phi, eps, well);
      const double err = sup_error_1d(r.schedule, phi, 4096);
      CHECK(err <= eps);
      CHECK(err <= r.omega + r.ramp + r.point_tol);
    }
  }
}

TEST_CASE("decreasing targets are rejected") {
  try {
    (void)approx_increasing(builtin_target("decreasing", 1), 0.1, relu_well_1d(0.0, 1.0));
    FAIL("expected an obstruction");
  } catch (const FlowmapError& e) {
    CHECK(e.kind() == ErrorKind::obstruction);
  }
}

TEST_CASE("modulus estimate") {
  const auto phi = builtin_target("smooth2", 1);
  CHECK(estimate_modulus(phi, 0.1, 100) == doctest::Approx(0.5 * (2.0 - 0.81 - 0.9)).epsilon(1e-9));
}
