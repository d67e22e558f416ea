#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <flowmap/csv.hpp>
#include <flowmap/json.hpp>

namespace fs = std::filesystem;
using flowmap::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("flowmap_cli_" + name);
  fs::remove_all(p);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string(FLOWMAP_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("rate sweep table") {
  const auto out = scratch("rate");
  REQUIRE(run("rate --target pwl4 --budgets 0.25,0.5,0.75,1.0 --out " + out.string()) == 0);
  const auto table = flowmap::read_numeric_csv((out / "rate.csv").string());
  CHECK(table.header == std::vector<std::string>{"T", "gamma", "bound", "measured_error"});
  REQUIRE(table.rows.size() == 4);
  for (const auto& r : table.rows) CHECK(r[3] <= r[2] * 1.001 + 1e-5);
  CHECK(fs::exists(out / "config.json"));
}

TEST_CASE("approx1d meets eps") {
  const auto out = scratch("approx1d");
  REQUIRE(run("approx1d --target builtin:smooth1 --eps 1e-2 --out " + out.string()) == 0);
  const json r = json::parse(slurp(out / "report.json"));
  CHECK(r["measured_sup_error"].get<double>() <= 1e-2);
  CHECK(r["increasing"].get<bool>());

  // the emitted schedule verifies independently
  const auto ver = scratch("verify");
  REQUIRE(run("verify --schedule " + (out / "schedule.json").string() + " --target smooth1 --out " + ver.string()) == 0);
  const json v = json::parse(slurp(ver / "report.json"));
  CHECK(v["sup_error"].get<double>() <= 1e-2);
  CHECK(v["jacobian"]["negative"] == 0);
}

TEST_CASE("module errors give error json and a nonzero exit") {
  const auto out = scratch("bad");
  CHECK(run("approxnd --target nosuch --out " + out.string()) != 0);
  const std::string cmd = std::string(FLOWMAP_CLI) + " approxnd --target nosuch --out " + out.string() + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string text;
  char buf[256];
  while (fgets(buf, sizeof buf, pipe)) text += buf;
  pclose(pipe);
  const json err = json::parse(text);
  CHECK(err["error"]["kind"] == "invalid_argument");
  CHECK(run("discretize") != 0);
}

TEST_CASE("reports are byte-identical across runs") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const std::string args = "approxnd --target flip --p 1 --eps 0.5 --grid-N 4 --samples 20000 --seed 7 --no-wall-time";
  REQUIRE(run(args + " --out " + a.string()) == 0);
  REQUIRE(run(args + " --out " + b.string()) == 0);
  for (const char* f : {"report.json", "schedule.json", "config.json"}) CHECK(slurp(a / f) == slurp(b / f));
  CHECK_FALSE(json::parse(slurp(a / "report.json")).contains("wall_time"));
}

TEST_CASE("discretize exports a versioned network") {
  const auto src = scratch("disc_src"), out = scratch("disc");
  REQUIRE(run("tensor --target identity --eps 0.5 --grid-N 2 --samples 5000 --out " + src.string()) == 0);
  REQUIRE(run("discretize --schedule " + (src / "schedule.json").string() + " --out " + out.string()) == 0);
  const json net = json::parse(slurp(out / "resnet.json"));
  CHECK(net["version"] == 1);
  CHECK(net["layers"].size() == net["delta_list"].size());
  CHECK(net["meta"]["S"].get<std::size_t>() == net["layers"].size());
}
