#include <doctest.h>

#include <cmath>
#include <random>

#include <flowmap/errors.hpp>
#include <flowmap/families.hpp>
#include <flowmap/integrator.hpp>
#include <flowmap/splitting.hpp>

using namespace flowmap;

namespace {

VectorField affine1(double a, double c) { return affine_field(Matrix(1, 1, a), {c}); }

IntegratorConfig tight() {
  IntegratorConfig c;
  c.method = Method::rk45_adaptive;
  c.rtol = 1e-12;
  c.atol = 1e-14;
  return c;
}

}  // namespace

TEST_CASE("rationalize") {
  const Rational r = rationalize(1.0 / 3.0);
  CHECK(r.num == 1);
  CHECK(r.den == 3);
  const Rational pi = rationalize(3.14159265358979, 64);
  CHECK(pi.den <= 64);
  CHECK(std::abs(pi.value() - 3.14159265358979) < 1e-3);
  CHECK(rationalize(0.5).den == 2);
}

TEST_CASE("averaging identical fields reproduces the flow") {
  auto f = affine1(-0.7, 0.2);
  Schedule ref(1);
  ref.append(f, 1.3);
  const Schedule s = average_flow_schedule(f, f, 1.3, 5);
  CHECK(s.total_time() == 1.3);
  CHECK(flow_eval(s, {0.4})[0] == doctest::Approx(flow_eval(ref, {0.4})[0]).epsilon(1e-12));
}

TEST_CASE("commuting constant fields cancel") {
  const Schedule s = average_flow_schedule(affine1(0, 1), affine1(0, -1), 3.0, 1);
  CHECK(s.size() == 2);
  CHECK(flow_eval(s, {0.25})[0] == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("splitting error decays like 1/N") {
  const auto f = affine1(1, 0), g = affine1(0, 1);
  const double x = 0.5;
  const double exact = (x + 1.0) * std::exp(0.5) - 1.0;
  double prev = 1e300;
  for (int N : {4, 8, 16}) {
    const double e = std::abs(flow_eval(average_flow_schedule(f, g, 1.0, N), {x})[0] - exact);
    CHECK(e < prev);
    if (N > 4) CHECK(e / prev == doctest::Approx(0.5).epsilon(0.2));
    prev = e;
  }
}

TEST_CASE("convex combination of three fields") {
  std::vector<VectorField> fs{affine1(-1.0, 0.5), affine1(0.5, -0.2), affine1(0.0, 1.0)};
  const std::vector<Rational> w{{1, 2}, {1, 3}, {1, 6}};
  const Schedule s = convex_combo_schedule(fs, w, 1.0, 32);
  CHECK(s.total_time() == 1.0);
  Schedule ref(1);
  ref.append(combo_field(fs, {0.5, 1.0 / 3.0, 1.0 / 6.0}), 1.0);
  const double x = 0.3;
  CHECK(std::abs(flow_eval(s, {x})[0] - flow_eval(ref, {x}, tight())[0]) < 1e-2);
}

TEST_CASE("two halves agree with the averaging schedule") {
  auto f = affine1(0.3, 0.1), g = affine1(-0.8, 0.4);
  const Schedule a = average_flow_schedule(f, g, 0.9, 7);
  const Schedule b = convex_combo_schedule({f, g}, std::vector<double>{0.5, 0.5}, 0.9, 7);
  CHECK(flow_eval(a, {0.2})[0] == flow_eval(b, {0.2})[0]);
  const Schedule single = convex_combo_schedule({f}, std::vector<double>{1.0}, 0.9, 11);
  CHECK(single.size() == 1);
}

TEST_CASE("error does not grow with N on random affine pairs") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    auto f = affine_field(Matrix::from_rows({{u(rng), u(rng)}, {u(rng), u(rng)}}), {u(rng), u(rng)});
    auto g = affine_field(Matrix::from_rows({{u(rng), u(rng)}, {u(rng), u(rng)}}), {u(rng), u(rng)});
    Schedule ref(2);
    ref.append(combo_field({f, g}, {0.5, 0.5}), 1.0);
    const Point x{u(rng), u(rng)};
    const Point want = flow_eval(ref, x, tight());
    double prev = 1e300;
    for (int N : {2, 4, 8, 16, 32}) {
      const double e = dist2(flow_eval(average_flow_schedule(f, g, 1.0, N), x, tight()), want);
      CHECK(e <= prev);
      prev = e;
    }
  }
}

TEST_CASE("splitting input validation") {
  auto f = affine1(1, 0);
  CHECK_THROWS_AS((void)average_flow_schedule(f, affine_field(Matrix::identity(2), {0, 0}), 1.0, 2), FlowmapError);
  CHECK_THROWS_AS((void)convex_combo_schedule({f, f}, std::vector<double>{0.5, 0.6}, 1.0, 2), FlowmapError);
  CHECK_THROWS_AS((void)convex_combo_schedule({f, f}, std::vector<Rational>{{1, 97}, {96, 97}}, 1.0, 2),
                  FlowmapError);
}
