#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <flowmap/csv.hpp>
#include <flowmap/errors.hpp>
#include <flowmap/target.hpp>

using namespace flowmap;

TEST_CASE("csv quoting round trip") {
  std::ostringstream os;
  write_csv_row(os, {"a", "b,c", "say \"hi\"", "x\ny"});
  CHECK(os.str() == "a,\"b,c\",\"say \"\"hi\"\"\",\"x\ny\"\r\n");
  std::istringstream is(os.str() + "1,2,3,4\r\n");
  const auto rows = parse_csv(is);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0][1] == "b,c");
  CHECK(rows[0][2] == "say \"hi\"");
  CHECK(rows[0][3] == "x\ny");
  CHECK(rows[1][3] == "4");
  CHECK(format_number(0.1) == "0.1");
}

TEST_CASE("builtin targets") {
  for (const auto& name : builtin_target_names(1)) {
    const auto t = builtin_target(name, 1);
    CHECK(t.in_dim() == 1);
    CHECK(t.increasing == (name != "decreasing"));
  }
  for (const auto& name : builtin_target_names(2)) CHECK(builtin_target(name, 2).in_dim() == 2);
  const auto p = resolve_target("builtin:pwl4", 1);
  REQUIRE(p.pwl.has_value());
  CHECK(p.pwl->xs.size() == 5);
  CHECK(p.scalar(0.0) == 0.0);
  CHECK(builtin_target("flip", 2)({0.25, 0.5}) == Point{-0.25, 0.5});
  CHECK_THROWS_AS((void)builtin_target("nope", 1), FlowmapError);
}

TEST_CASE("csv targets") {
  const std::string path = "flowmap_target_test.csv";
  {
    std::ofstream f(path);
    f << "x,y\n0,0\n0.5,0.2\n1,1\n";
  }
  const auto t = resolve_target(path, 1);
  CHECK(t.increasing);
  CHECK(t.scalar(0.5) == doctest::Approx(0.2));
  double prev = -1.0;
  for (int k = 0; k <= 100; ++k) {
    const double y = t.scalar(k / 100.0);
    CHECK(y >= prev);
    prev = y;
  }
  {
    std::ofstream f(path);
    f << "0,0,1,2\n1,1,3,4\n";
  }
  const auto g = target_from_csv(path, 2);
  CHECK(g.out_dim == 2);
  CHECK(g({0.9, 0.8}) == Point{3, 4});
  std::remove(path.c_str());
  CHECK_THROWS_AS((void)target_from_csv("does_not_exist.csv", 1), FlowmapError);
}
