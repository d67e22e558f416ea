#include <doctest.h>

#include <cmath>
#include <random>

#include <flowmap/errors.hpp>
#include <flowmap/families.hpp>
#include <flowmap/terminal.hpp>

using namespace flowmap;

TEST_CASE("identity terminal map lifts values to themselves") {
  const auto g = TerminalMap::identity(3);
  const auto z = lift_targets({{1.0, -2.0, 0.5}}, g);
  CHECK(z[0] == Point{1.0, -2.0, 0.5});
}

TEST_CASE("coordinate projection gives the minimum-norm preimage") {
  TerminalMap g{Matrix::from_rows({{1.0, 0.0}}), {0.0}};
  const auto z = lift_targets({{3.0}}, g);
  CHECK(z[0][0] == doctest::Approx(3.0));
  CHECK(std::abs(z[0][1]) <= 1e-15);
}

TEST_CASE("random full-rank maps are inverted on their range") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> G;
  TerminalMap g{Matrix(2, 3), {G(rng), G(rng)}};
  for (auto& v : g.W.data) v = G(rng);
  CHECK(g.full_row_rank());
  std::vector<Point> values(10);
  for (auto& v : values) v = {G(rng), G(rng)};
  const auto z = lift_targets(values, g);
  for (std::size_t k = 0; k < values.size(); ++k) CHECK(dist2(g(z[k]), values[k]) <= 1e-12);
}

TEST_CASE("values off the range are a covering violation") {
  TerminalMap g{Matrix::from_rows({{1.0, 0.0}, {2.0, 0.0}}), {0.0, 0.0}};
  CHECK_FALSE(g.full_row_rank());
  CHECK(lift_targets({{1.0, 2.0}}, g).size() == 1);
  try {
    (void)lift_targets({{1.0, 0.0}}, g);
    FAIL("expected a covering violation");
  } catch (const FlowmapError& e) {
    CHECK(e.kind() == ErrorKind::covering_violation);
  }
}

TEST_CASE("terminal map json round trip") {
  TerminalMap g{Matrix::from_rows({{1.0, 2.0}, {0.5, -1.0}}), {0.25, 3.0}};
  const TerminalMap h = terminal_from_json(terminal_to_json(g));
  CHECK(h.W.data == g.W.data);
  CHECK(h.c == g.c);
  CHECK(terminal_to_json(g).dump() == R"({"kind":"affine","W":[[1.0,2.0],[0.5,-1.0]],"c":[0.25,3.0]})");
  CHECK_THROWS_AS((void)terminal_from_json(json{{"kind", "named"}}), FlowmapError);
}

TEST_CASE("identity flow measured against the identity target") {
  const auto F = builtin_target("identity", 2);
  const auto e = compose_and_measure(TerminalMap::identity(2), Schedule(2), F, 2.0, 1000, 5);
  CHECK(e.value == 0.0);
  CHECK(e.std_error == 0.0);
}

TEST_CASE("monte carlo error matches a closed form") {
  // flow of z' = (1, 0) for time 0.1 shifts x1 by 0.1: L^p error 0.1 exactly
  Schedule s(2);
  s.append(affine_field(Matrix(2, 2), {1.0, 0.0}), 0.1);
  const auto e = lp_error_mc(s, builtin_target("identity", 2), 1.5, 2000, 1);
  CHECK(e.value == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("terminal maps transport errors with their Lipschitz constant") {
  TerminalMap g{Matrix::from_rows({{2.0, -1.0}}), {0.5}};
  TargetSpec F;
  F.name = "sum";
  F.domain = Box{{0.0, 0.0}, {1.0, 1.0}};
  F.out_dim = 1;
  F.fn = [](std::span<const double> x, std::span<double> y) { y[0] = 2.0 * x[0] - x[1] + 0.5 + 0.3 * x[0] * x[1]; };
  Schedule s1(2), s2(2);
  s1.append(affine_field(Matrix(2, 2), {0.05, 0.0}), 1.0);
  s2.append(affine_field(Matrix(2, 2), {0.0, -0.03}), 1.0);
  for (double p : {1.0, 2.0}) {
    const double e1 = compose_and_measure(g, s1, F, p, 4000, 9).value;
    const double e2 = compose_and_measure(g, s2, F, p, 4000, 9).value;
    // sup gap between the two flows is |(0.05, 0.03)|
    CHECK(std::abs(e1 - e2) <= g.lipschitz_bound() * std::hypot(0.05, 0.03) + 1e-12);
  }
}

TEST_CASE("sampling is reproducible") {
  Schedule s(2);
  s.append(affine_field(Matrix::identity(2), {0.0, 0.0}), 0.2);
  const auto F = builtin_target("swirl", 2);
  const auto a = lp_error_mc(s, F, 2.0, 5000, 42);
  const auto b = lp_error_mc(s, F, 2.0, 5000, 42);
  CHECK(a.value == b.value);
  CHECK(a.std_error == b.std_error);
  CHECK(a.std_error > 0.0);
}
