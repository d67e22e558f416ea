#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <flowmap/errors.hpp>
#include <flowmap/families.hpp>
#include <flowmap/integrator.hpp>
#include <flowmap/piecewise_affine.hpp>

using namespace flowmap;

namespace {

VectorField relu1(double v, double w, double b) {
  return relu_field(Matrix(1, 1, v), Matrix(1, 1, w), {b});
}

IntegratorConfig rk45() {
  IntegratorConfig c;
  c.method = Method::rk45_adaptive;
  c.rtol = 1e-12;
  c.atol = 1e-13;
  return c;
}

}  // namespace

TEST_CASE("empty schedule is the identity") {
  Schedule s(2);
  const Point x{0.3, -1.2};
  CHECK(flow_eval(s, x) == x);
}

TEST_CASE("relu drive lands on the target") {
  Schedule s(1);
  s.append(relu1(-1.0, 1.0, 0.0), std::log(2.0));
  CHECK(flow_eval(s, {2.0})[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(flow_eval_exact_relu_1d(-1.0, 1.0, 0.0, 2.0, std::log(2.0)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(flow_eval_exact_relu_1d(3.7, 1.0, -5.0, 1.0, 7.0) == 1.0);
  CHECK(flow_eval_exact_relu_1d(1.0, 1.0, 0.0, 1.0, 1.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-14));
}

TEST_CASE("closed form agrees with rk45 across kinks") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double v = u(rng), w = u(rng), b = u(rng), x = u(rng);
    Schedule s(1);
    s.append(relu1(v, w, b), 0.7);
    const double exact = flow_eval_exact_relu_1d(v, w, b, x, 0.7);
    CHECK(flow_eval(s, {x}, rk45())[0] == doctest::Approx(exact).epsilon(1e-9));
  }
}

TEST_CASE("semigroup property") {
  Matrix A = Matrix::from_rows({{0.1, -0.7}, {0.5, -0.2}});
  auto f = affine_field(A, {0.3, -0.1});
  auto g = relu_field(Matrix::from_rows({{1.0, 0.5}, {-0.3, 1.0}}), Matrix::from_rows({{0.4, -1.0}, {1.0, 0.2}}),
                      {0.1, -0.2});
  for (const auto& fld : {f, g}) {
    Schedule two(2), one(2);
    two.append(fld, 0.4).append(fld, 0.9);
    one.append(fld, 1.3);
    const Point x{0.25, -0.6};
    const Point a = flow_eval(two, x, rk45());
    const Point b = flow_eval(one, x, rk45());
    CHECK(dist2(a, b) < 1e-9);
  }
}

TEST_CASE("rotation keeps orientation") {
  auto rot = affine_field(Matrix::from_rows({{0.0, -1.0}, {1.0, 0.0}}), {0.0, 0.0});
  Schedule s(2);
  s.append(rot, std::numbers::pi / 2);
  const auto out = flow_eval(s, {1.0, 0.0});
  CHECK(out[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(out[1] == doctest::Approx(1.0).epsilon(1e-9));
  const auto res = jacobian_sign_check(s, {{0, 0}, {1, 0}, {0, 1}, {1, 1}}, 1e-5);
  for (const auto& r : res) {
    CHECK(r.positive());
    CHECK(r.det == doctest::Approx(1.0).epsilon(1e-6));
  }
  for (const auto& r : jacobian_sign_check(Schedule(2), {{0.5, 0.5}}, 1e-5)) CHECK(r.det == doctest::Approx(1.0));
}

TEST_CASE("integrator config validation and limits") {
  IntegratorConfig bad;
  bad.rtol = 0.0;
  CHECK_THROWS_AS(bad.validate(), FlowmapError);
  IntegratorConfig tiny = rk45();
  tiny.max_steps = 2;
  Schedule s(1);
  s.append(affine_field(Matrix(1, 1, -3.0), {1.0}), 50.0);
  // a nonlinear field keeps the numeric path
  Schedule n(1);
  n.append(activation_field(Activation::tanh, Matrix(1, 1, 1.0), Matrix(1, 1, 3.0), {0.0}), 50.0);
  try {
    (void)flow_eval(n, {0.5}, tiny);
    FAIL("expected step exhaustion");
  } catch (const FlowmapError& e) {
    CHECK(e.kind() == ErrorKind::step_exhaustion);
  }
  Schedule blow(1);
  blow.append(affine_field(Matrix(1, 1, 5.0), {0.0}), 10.0);
  IntegratorConfig num = rk45();
  try {
    (void)flow_eval(blow, {1.0}, num);
    FAIL("expected blow up");
  } catch (const FlowmapError& e) {
    CHECK(e.kind() == ErrorKind::blow_up);
  }
}

TEST_CASE("1D flows are increasing") {
  Schedule s(1);
  s.append(relu1(-1.0, 1.0, -0.3), 0.8)
      .append(relu1(2.0, -1.0, 0.4), 0.5)
      .append(activation_field(Activation::sigmoid, Matrix(1, 1, 1.5), Matrix(1, 1, -2.0), {0.1}), 0.6);
  double prev = -1e300;
  for (int k = 0; k <= 400; ++k) {
    const double y = flow_eval(s, {-2.0 + 4.0 * k / 400.0})[0];
    CHECK(y > prev);
    prev = y;
  }
}

TEST_CASE("uniform time modulus") {
  auto f = relu_field(Matrix(1, 1, 1.0), Matrix(1, 1, 1.0), {0.5});
  Schedule s(1);
  s.append(f, 1.0);
  // z + 0.5 grows at most like 1.5 e^t from [0, 1]
  const double M = 1.5 * std::exp(1.0);
  for (int k = 0; k <= 20; ++k) {
    const double x = k / 20.0;
    const double a = flow_at_time(s, {x}, 0.3)[0];
    const double b = flow_at_time(s, {x}, 0.35)[0];
    CHECK(std::abs(a - b) <= M * 0.05);
  }
}

TEST_CASE("gronwall stability") {
  auto f = affine_field(Matrix::from_rows({{-0.5, 1.0}, {-1.0, -0.5}}), {0.0, 0.0});
  const double e2 = 1e-3;
  auto g = affine_field(Matrix::from_rows({{-0.5, 1.0}, {-1.0, -0.5}}), {e2, 0.0});
  const double t = 2.0;
  Schedule sf(2), sg(2);
  sf.append(f, t);
  sg.append(g, t);
  const Point x{0.3, 0.4};
  CHECK(dist2(flow_eval(sf, x), flow_eval(sg, x)) <= t * e2 * std::exp(t * f.lipschitz_bound()));
}

TEST_CASE("piecewise affine flow and hitting time") {
  PiecewiseAffine p(0.0, 0.0, {{-1.0, 1.0, -1.0}, {1.0, -1.0, -2.0}});  // -(s-1)+ + (-s-2)+
  CHECK(p(3.0) == doctest::Approx(-2.0));
  CHECK(p(-4.0) == doctest::Approx(2.0));
  CHECK(p(0.0) == 0.0);
  CHECK(p.flow(3.0, std::log(2.0)) == doctest::Approx(2.0));
  const auto t = p.hitting_time(3.0, 2.0);
  REQUIRE(t.has_value());
  CHECK(*t == doctest::Approx(std::log(2.0)));
  CHECK_FALSE(p.hitting_time(3.0, 0.5).has_value());
  CHECK(p.flow(3.0, 1e6) == doctest::Approx(1.0));
  PiecewiseAffine q = p.scaled(-2.0);
  const auto k = q.proportional_to(p);
  REQUIRE(k.has_value());
  CHECK(*k == doctest::Approx(-2.0));
}

TEST_CASE("structured plan handles frozen and follower coordinates") {
  // z1' = relu(z2 - 0.2), z2' = 0: frozen driver
  auto f = relu_field(Matrix::from_rows({{1.0}, {0.0}}), Matrix::from_rows({{0.0, 1.0}}), {-0.2});
  Schedule s(2);
  s.append(f, 1.5);
  const auto out = flow_eval(s, {0.1, 0.7});
  CHECK(out[0] == doctest::Approx(0.1 + 1.5 * 0.5).epsilon(1e-14));
  CHECK(out[1] == 0.7);
  const auto num = flow_eval(s, {0.1, 0.7}, rk45());
  CHECK(num[0] == doctest::Approx(out[0]).epsilon(1e-10));
}
