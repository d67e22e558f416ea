#include <doctest.h>

#include <cmath>
#include <numbers>

#include <flowmap/discretize.hpp>
#include <flowmap/errors.hpp>
#include <flowmap/families.hpp>
#include <flowmap/oned.hpp>
#include <flowmap/well.hpp>

using namespace flowmap;

namespace {

Schedule growth() {
  Schedule s(1);
  s.append(affine_field(Matrix(1, 1, 1.0), {0.0}), 1.0);
  return s;
}

}  // namespace

TEST_CASE("empty schedule exports the identity") {
  const auto net = euler_discretize(Schedule(2), 16);
  CHECK(net.S() == 16);
  CHECK(net.forward({0.3, -1.5}) == Point{0.3, -1.5});
}

TEST_CASE("layer allocation") {
  Schedule s(1);
  const auto f = affine_field(Matrix(1, 1, 0.0), {1.0});
  s.append(f, 1.0).append(f, 2.0).append(f, 0.5);
  CHECK(allocate_layers(s, 10) == std::vector<std::size_t>{3, 5, 2});
  CHECK(allocate_layers(s, 3) == std::vector<std::size_t>{1, 1, 1});
  CHECK_THROWS_AS((void)allocate_layers(s, 2), FlowmapError);
  const auto net = euler_discretize(s, 10);
  double t = 0.0;
  for (double d : net.delta_list()) t += d;
  CHECK(t == doctest::Approx(3.5).epsilon(1e-15));
  // constant field: Euler is exact
  CHECK(net.forward({0.0})[0] == doctest::Approx(3.5).epsilon(1e-14));
}

TEST_CASE("compound growth") {
  for (std::size_t S : {16, 256, 1024}) {
    const double y = euler_discretize(growth(), S).forward({1.0})[0];
    CHECK(y == doctest::Approx(std::pow(1.0 + 1.0 / static_cast<double>(S), static_cast<double>(S))).epsilon(1e-12));
    CHECK(std::numbers::e - y == doctest::Approx(std::numbers::e / (2.0 * S)).epsilon(2.0 / S));
  }
}

TEST_CASE("json round trip reproduces forward passes") {
  Schedule s(2);
  s.append(activation_field(Activation::tanh, Matrix::from_rows({{1.0, 0.5}, {-0.3, 1.0}}),
                            Matrix::from_rows({{1.0, -1.0}, {0.5, 1.0}}), {0.1, -0.2}),
           0.7);
  s.append(tensor_field(relu_field(Matrix(1, 1, 1.0), Matrix(1, 1, -1.0), {0.2}), 2), 0.3);
  const auto net = euler_discretize(s, 50);
  const json j = resnet_to_json(net);
  CHECK(j["version"] == 1);
  CHECK(j["meta"]["S"] == 50);
  CHECK(j["layers"].size() == 50);
  const auto back = resnet_from_json(json::parse(j.dump()));
  for (const Point& x : probe_grid(2, 5, -1.0, 1.0)) CHECK(back.forward(x) == net.forward(x));
  json bad = j;
  bad["version"] = 99;
  CHECK_THROWS_AS((void)resnet_from_json(bad), FlowmapError);
}

TEST_CASE("truncation slopes") {
  const std::vector<std::size_t> S{64, 128, 256, 512};
  const auto lin = truncation_slope(growth(), S, probe_grid(1, 33));
  CHECK(lin.slope == doctest::Approx(-1.0).epsilon(0.02));
  CHECK(lin.monotone);

  const auto id = truncation_slope(Schedule(1), S, probe_grid(1, 9));
  CHECK(id.degenerate);
  CHECK(slope_report_to_json(id)["slope"].is_null());

  Schedule kink(1);
  kink.append(relu_field(Matrix(1, 1, 1.0), Matrix(1, 1, 1.0), {-0.4}), 1.0);
  kink.append(relu_field(Matrix(1, 1, -1.0), Matrix(1, 1, -1.0), {0.7}), 0.5);
  const auto k = truncation_slope(kink, S, probe_grid(1, 257));
  CHECK(k.slope <= -0.75);
  CHECK(k.monotone);
}

TEST_CASE("exported point matching network") {
  const PointMatchProblem p{{0.1, 0.5, 0.9}, {0.3, 1.2, 1.5}, relu_well_1d(-0.5, -0.25), 0.05};
  const Schedule s = match_points(p);
  const auto net = euler_discretize(s, 1024);
  for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(net.forward({p.xs[k]})[0] - p.ys[k]) <= 2.0 * p.eps);
}
