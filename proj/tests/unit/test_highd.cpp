#include <doctest.h>

#include <cmath>
#include <random>

#include <flowmap/errors.hpp>
#include <flowmap/highd.hpp>
#include <flowmap/integrator.hpp>

using namespace flowmap;

namespace {

// every stage moves one coordinate only
void check_single_coordinate_stages(const Schedule& s, const std::vector<Point>& xs) {
  std::vector<Point> cur = xs;
  for (const auto& st : s.steps()) {
    Schedule one(s.dim());
    one.append(st.field, st.tau);
    const auto next = flow_eval_batch(one, cur);
    for (std::size_t j = 0; j < cur.size(); ++j) {
      std::size_t moved = 0;
      for (std::size_t k = 0; k < s.dim(); ++k)
        if (std::abs(next[j][k] - cur[j][k]) > 1e-12) ++moved;
      CHECK(moved <= 1);
    }
    cur = next;
  }
}

}  // namespace

TEST_CASE("grid target layout") {
  const auto F = builtin_target("identity", 2);
  const GridTarget g = make_grid_target(F, 4, 2.0);
  CHECK(g.cells() == 16);
  CHECK(g.corner(5) == Point{0.25, 0.25});
  CHECK(g.values[5] == Point{0.375, 0.375});
  CHECK(g.cell_of(std::vector<double>{0.3, 0.9}) == 1 + 4 * 3);
  CHECK(g.cell_of(std::vector<double>{1.0, 1.0}) == 15);
  // q = 8 midpoint subcells per axis: discrete variance h^2 (1 - 1/q^2) / 12 per coordinate, h = 1/4
  CHECK(g.lp_error == doctest::Approx(std::sqrt(2.0 * (1.0 - 1.0 / 64.0) / 12.0) / 4.0).epsilon(1e-12));
  CHECK(make_grid_target(builtin_target("constant", 2), 2, 1.0).lp_error == 0.0);
}

TEST_CASE("canonical h alpha") {
  CHECK(h_alpha(0.5, 2, 0.2) == 0.0);
  CHECK(h_alpha(0.5, 2, 0.7) == 0.5);
  CHECK(h_alpha(0.5, 2, 0.375) == doctest::Approx(0.25));
  CHECK(h_alpha(0.5, 2, 1.0) == 1.0);
  CHECK(h_alpha(0.9, 4, 0.5) == 0.5);
  CHECK_THROWS_AS((ShrinkSpec{1.0, 2, 1e-3}.validate()), FlowmapError);
}

TEST_CASE("contraction onto the corners") {
  const auto well = relu_well_nd(2);
  const ShrinkSpec spec{0.5, 2, 1e-4};
  const Schedule H = build_contraction(spec, well);
  CHECK(dist2(flow_eval(H, {0.2, 0.7}), Point{0.0, 0.5}) <= spec.eps1);
  for (const auto& c : grid_corners(2, 2)) CHECK(dist2(flow_eval(H, c), c) <= spec.eps1);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const Point x{U(rng), U(rng)};
    const Point y = flow_eval(H, x);
    for (std::size_t i = 0; i < 2; ++i) {
      const double local = x[i] * 2 - std::floor(x[i] * 2);
      if (local <= spec.alpha) CHECK(std::abs(y[i] - h_alpha(0.5, 2, x[i])) <= spec.eps1);
    }
  }
  check_single_coordinate_stages(H, grid_corners(2, 2));
}

TEST_CASE("separation of distinct points") {
  const auto well = relu_well_nd(2);
  SeparationTrace tr;
  CHECK(separate_points({{0.1, 0.2}, {0.3, 0.4}}, well, 0.1, &tr).empty());
  CHECK(tr.collisions == std::vector<std::size_t>{0});

  const std::vector<Point> two{{0.0, 0.0}, {0.0, 1.0}};
  const Schedule s = separate_points(two, well, 0.05, &tr);
  CHECK(s.size() == 1);
  const auto y = flow_eval_batch(s, two);
  CHECK(y[0][0] != y[1][0]);
  CHECK(tr.max_displacement <= 0.05);

  const std::vector<Point> line{{0.5, 0.0}, {0.5, 0.25}, {0.5, 0.5}, {0.5, 1.0}};
  const Schedule l = separate_points(line, well, 0.1, &tr);
  CHECK(l.size() <= 6);
  CHECK(collision_count(flow_eval_batch(l, line)) == 0);
  for (std::size_t k = 1; k < tr.collisions.size(); ++k) CHECK(tr.collisions[k] < tr.collisions[k - 1]);
  CHECK_THROWS_AS((void)separate_points({{0.0, 0.0}, {0.0, 0.0}}, well, 0.1), FlowmapError);
}

TEST_CASE("separation in three dimensions on a lattice") {
  const auto pts = grid_corners(3, 3);
  SeparationTrace tr;
  const Schedule s = separate_points(pts, relu_well_nd(3), 0.1, &tr);
  CHECK(collision_count(flow_eval_batch(s, pts)) == 0);
  CHECK(tr.max_displacement <= 0.1);
  for (std::size_t k = 1; k < tr.collisions.size(); ++k) CHECK(tr.collisions[k] < tr.collisions[k - 1]);
  check_single_coordinate_stages(s, pts);
}

TEST_CASE("transport of a single point uses one stage per coordinate") {
  const auto well = relu_well_nd(3);
  const Schedule s = transport_points({{0.1, 0.2, 0.3}}, {{-1.0, 2.0, 0.5}}, well, 1e-9);
  CHECK(s.size() == 3);
  CHECK(dist2(flow_eval(s, {0.1, 0.2, 0.3}), Point{-1.0, 2.0, 0.5}) <= 1e-9);
}

TEST_CASE("transport with matching endpoints is the identity") {
  const std::vector<Point> xs{{0.1, 0.7}, {0.4, 0.2}, {0.9, 0.5}};
  CHECK(transport_points(xs, xs, relu_well_nd(2), 1e-3).empty());
}

TEST_CASE("transport of random points") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 1.0), V(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Point> xs(3), ys(3);
    for (auto& x : xs) x = {U(rng), U(rng)};
    for (auto& y : ys) y = {V(rng), V(rng)};
    TransportTrace tr;
    const Schedule s = transport_points(xs, ys, relu_well_nd(2), 1e-4, &tr);
    const auto end = flow_eval_batch(s, xs);
    for (std::size_t k = 0; k < 3; ++k) CHECK(dist2(end[k], ys[k]) <= 1e-4);
    check_single_coordinate_stages(s, xs);
  }
}

TEST_CASE("colliding targets are spread in the leading coordinate") {
  const std::vector<Point> ys{{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.1}};
  const auto spread = distinct_leading_coordinate(ys, 0.01);
  CHECK(collision_count(spread, 0, 0.0) == 0);
  for (std::size_t k = 0; k < 3; ++k) CHECK(dist2(spread[k], ys[k]) < 0.005);
}

TEST_CASE("well pipeline on small problems") {
  LpOptions opt;
  opt.mc_samples = 20000;
  const auto id = approximate_lp(builtin_target("identity", 2), 0.3, 2.0, relu_well_nd(2), opt);
  CHECK(id.report.measured_lp_error <= 0.3);
  CHECK(id.report.grid_error <= 0.15);
  CHECK(id.report.omega_psi + std::pow(id.report.N, 1.0) * id.report.eps1 <= 0.3 / 4 + 1e-12);
  CHECK(id.report.stages.total() == id.schedule.size());

  opt.grid_N = 4;
  const auto flip = approximate_lp(builtin_target("flip", 2), 0.5, 1.0, relu_well_nd(2), opt);
  CHECK(flip.report.measured_lp_error <= 0.5);
  const json j = report_to_json(flip.report);
  CHECK(j.begin().key() == "n");
  CHECK(j.contains("wall_time"));
  CHECK_FALSE(report_to_json(flip.report, false).contains("wall_time"));
}

TEST_CASE("pipeline budget errors") {
  LpOptions opt;
  opt.grid_N = 1;
  CHECK_THROWS_AS((void)approximate_lp(builtin_target("swirl", 2), 0.01, 1.0, relu_well_nd(2), opt), FlowmapError);
  CHECK_THROWS_AS((void)approximate_lp(builtin_target("identity"), 0.1, 1.0, relu_well_nd(1)), FlowmapError);
}
