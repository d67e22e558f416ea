#include <doctest.h>

#include <cmath>
#include <random>

#include <flowmap/errors.hpp>
#include <flowmap/families.hpp>
#include <flowmap/integrator.hpp>
#include <flowmap/well.hpp>

using namespace flowmap;

TEST_CASE("soft threshold values") {
  CHECK(sigmoid_soft_threshold(0.5) == 0.0);
  CHECK(sigmoid_soft_threshold(1.5) == 0.25);
  CHECK(sigmoid_soft_threshold(3.0) == 0.5);
  CHECK(sigmoid_soft_threshold(-1.5) == 0.25);
}

TEST_CASE("sigmoid sum stays within its bound") {
  CHECK(sigmoid_smn(10, 5, 0.0) <= 1.0 / (1.0 + std::exp(2.0)));
  double prev = 1e300;
  for (int N : {3, 5, 10, 20}) {
    const int M = N * N;
    double gap = 0.0;
    for (int k = 0; k < 10000; ++k) {
      const double z = -5.0 + 10.0 * k / 9999.0;
      gap = std::max(gap, std::abs(sigmoid_soft_threshold(z) - sigmoid_smn(M, N, z)));
    }
    CHECK(gap < sigmoid_smn_bound(M, N));
    CHECK(gap < prev);
    prev = gap;
  }
  CHECK_THROWS_AS((void)sigmoid_smn(0, 3, 1.0), FlowmapError);
}

TEST_CASE("relu field evaluation and metadata") {
  auto zero = relu_field(Matrix(2, 3), Matrix(3, 2, 1.0), {1, 2, 3});
  CHECK(zero({0.4, -7.0}) == Point{0.0, 0.0});
  auto f = relu_field(Matrix::from_rows({{1.0, -2.0}}), Matrix::from_rows({{1.0}, {-1.0}}), {0.0, 1.0});
  CHECK(f({2.0})[0] == doctest::Approx(2.0));
  CHECK(f({-3.0})[0] == doctest::Approx(-8.0));
  CHECK(f.lipschitz_bound() >= 2.0);
  CHECK_THROWS_AS((void)relu_field(Matrix(2, 2), Matrix(3, 2), {0, 0, 0}), FlowmapError);
}

TEST_CASE("relu wells") {
  const auto w = relu_well_1d(-0.5, 1.5);
  CHECK(w.field({0.2})[0] == 0.0);
  CHECK(w.field({2.5})[0] == doctest::Approx(0.5));
  CHECK(w.field({-1.5})[0] == doctest::Approx(0.5));
  for (std::size_t n : {1u, 2u, 3u}) {
    const auto h = relu_well_nd(n);
    Point x(n, 0.0);
    x[0] = 2.0;
    for (double v : h.field(x)) CHECK(v == doctest::Approx(1.0 / (2.0 * n)));
    const auto cert = certify_well(h, 20000);
    CHECK_MESSAGE(cert.passed, cert.detail);
    CHECK(cert.max_inside <= 1e-12);
  }
  CHECK(certify_well(w, 20000).passed);
}

TEST_CASE("sigmoid and block wells certify") {
  const auto s = sigmoid_well(100, 10, 2);
  CHECK(s.certified_slack == doctest::Approx(sigmoid_smn_bound(100, 10)));
  CHECK(certify_well(s, 20000).passed);
  for (auto sigma : {Activation::relu, Activation::sigmoid, Activation::tanh}) {
    const double lo = sigma == Activation::relu ? 0.5 : (sigma == Activation::sigmoid ? 0.3 : -0.4);
    const double hi = sigma == Activation::relu ? 2.0 : (sigma == Activation::sigmoid ? 0.7 : 0.6);
    const auto b = block_well(sigma, lo, hi, 2);
    const auto cert = certify_well(b, 20000);
    CHECK_MESSAGE(cert.passed, cert.detail);
    CHECK(cert.max_inside <= 1e-12);
    // zero set scan along the first coordinate matches the preimage of I
    for (int k = 0; k <= 200; ++k) {
      const double z = -4.0 + 8.0 * k / 200.0;
      const double y = 2.0 / (hi - lo) * activate(sigma, z) - (lo + hi) / (hi - lo);
      const double v = b.field({z, b.zero_box.center()[1]})[0];
      if (std::abs(y) <= 1.0 - 1e-9) CHECK(std::abs(v) <= 1e-12);
      if (std::abs(y) >= 1.0 + 1e-9) CHECK(v > 0.0);
    }
  }
  CHECK_THROWS_AS((void)block_well(Activation::relu, -1.0, 1.0, 1), FlowmapError);
}

TEST_CASE("shifted well moves the zero box and flips signs") {
  const auto w = shifted_well(relu_well_1d(0.0, 1.0), {2.0}, -1);
  CHECK(w.zero_box.lo[0] == 2.0);
  CHECK(w.field({2.5})[0] == 0.0);
  CHECK(w.field({4.0})[0] < 0.0);
  CHECK(w.outside_sign(0, 0, 1) == -1);
  CHECK(certify_well(w, 5000).passed);
}

TEST_CASE("restriction semantics and validation") {
  auto h = relu_well_1d(0.0, 1.0).field;
  AffineRestriction r = AffineRestriction::identity(1);
  auto same = apply_restriction(h, r);
  for (double x : {-1.0, 0.5, 2.0}) CHECK(same({x})[0] == h({x})[0]);
  r.D = {-1.0};
  r.b = {0.75};
  auto moved = apply_restriction(h, r);
  for (double x : {-2.0, -0.5, 0.0, 1.5}) CHECK(moved({x})[0] == doctest::Approx(-h({x + 0.75})[0]));

  AffineRestriction bad = AffineRestriction::identity(2);
  bad.A(0, 1) = 0.5;
  CHECK_THROWS_AS(bad.validate(), FlowmapError);
  bad.regime = Regime::tensor;
  CHECK_NOTHROW(bad.validate());
  AffineRestriction big = AffineRestriction::identity(1);
  big.A(0, 0) = 1.5;
  CHECK_THROWS_AS(big.validate(), FlowmapError);
  AffineRestriction dbad = AffineRestriction::identity(1);
  dbad.D = {0.5};
  CHECK_THROWS_AS(dbad.validate(), FlowmapError);
}

TEST_CASE("frozen restriction drives one coordinate by another") {
  const auto h = relu_well_nd(2);
  AffineRestriction r = AffineRestriction::identity(2);
  r.D = {1.0, 0.0};
  r.A = Matrix::diagonal({0.0, 0.5});
  r.b = {0.0, 0.2};
  auto f = apply_restriction(h.field, r);
  const Point v = f({7.0, 4.0});
  CHECK(v[1] == 0.0);
  CHECK(v[0] == doctest::Approx(h.field({0.0, 2.2})[0]));
}

TEST_CASE("restriction composition matches sequential application") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto f = relu_field(Matrix::from_rows({{1.0, 0.3}, {-0.4, 0.8}}), Matrix::from_rows({{0.7, -0.2}, {0.1, 1.0}}),
                      {0.1, -0.3});
  for (int t = 0; t < 20; ++t) {
    AffineRestriction r1{{1.0, -1.0}, Matrix::diagonal({u(rng), u(rng)}), {u(rng), u(rng)}};
    AffineRestriction r2{{-1.0, 0.0}, Matrix::diagonal({u(rng), u(rng)}), {u(rng), u(rng)}};
    auto seq = apply_restriction(apply_restriction(f, r1), r2);
    auto comp = apply_restriction(f, compose(r1, r2));
    const Point x{u(rng) * 3, u(rng) * 3};
    const Point a = seq(x), b = comp(x);
    CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-12));
    CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-12));
  }
}

TEST_CASE("block field reduces to a relu layer") {
  Matrix V = Matrix::from_rows({{1.0, -0.5}});
  Matrix W2 = Matrix::from_rows({{2.0}, {-1.0}});
  Point b2{0.1, 0.3};
  auto blk = block_field(V, W2, b2, Matrix::identity(1), {0.0}, Activation::relu);
  auto rel = relu_field(V, W2, b2);
  for (double x : {-2.0, -0.1, 0.4, 3.0}) CHECK(blk({x})[0] == doctest::Approx(rel({std::max(x, 0.0)})[0]));
  auto zero = block_field(Matrix(1, 2), W2, b2, Matrix::identity(1), {0.0}, Activation::tanh);
  CHECK(zero({1.0})[0] == 0.0);
}

TEST_CASE("tensor field") {
  auto g = relu_field(Matrix(1, 1, 1.0), Matrix(1, 1, 1.0), {-1.0});
  auto t = tensor_field(g, 2);
  CHECK(t({2.0, 0.0}) == Point{1.0, 0.0});
  CHECK(t({0.0, 2.0}) == Point{0.0, 1.0});
  CHECK(tensor_field(relu_field(Matrix(1, 1), Matrix(1, 1), {0.0}), 3)({1, 2, 3}) == Point{0, 0, 0});
}

TEST_CASE("schedule json round trip is exact") {
  auto w = block_well(Activation::sigmoid, 0.2, 0.9, 2);
  AffineRestriction r{{1.0, 0.0}, Matrix::diagonal({0.3, 1.0}), {0.1 / 3.0, -0.7}};
  Schedule s(2);
  s.append(w.field, 0.123456789)
      .append(apply_restriction(relu_well_nd(2).field, r), 1.0 / 7.0)
      .append(sigmoid_smn_field(100, 10, 2), 0.5)
      .append(tensor_field(relu_field(Matrix(1, 1, -1.0), Matrix(1, 1, 1.0), {0.3}), 2), 0.25)
      .append(combo_field({affine_field(Matrix::identity(2), {0.1, 0.2}), negated(w.field)}, {0.5, 0.5}), 0.1);
  const json j = schedule_to_json(s);
  const Schedule back = schedule_from_json(json::parse(j.dump()));
  CHECK(schedule_to_json(back).dump() == j.dump());
  const Point x{0.37, -1.4};
  const Point a = flow_eval(s, x), b = flow_eval(back, x);
  CHECK(a == b);
  CHECK_THROWS_AS((void)schedule_from_json(json::parse(R"({"dim":1,"steps":[{"family_tag":"nope","params":{},"tau":1}]})")),
                  FlowmapError);
}
