#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <flowmap/csv.hpp>
#include <flowmap/json.hpp>

namespace flowmap::cli {

/// Output directory for one invocation.
class RunDir {
 public:
  explicit RunDir(std::filesystem::path dir);
  void write_json(const std::string& name, const json& j) const;
  void write_csv(const std::string& name, const std::vector<CsvRow>& rows) const;
  [[nodiscard]] const std::filesystem::path& path() const noexcept { return dir_; }

 private:
  std::filesystem::path dir_;
};

struct Common {
  std::string out = "flowmap_run";
  std::uint64_t seed = 1;
  bool wall_time = true;
};

struct Approx1dArgs {
  std::string target = "builtin:smooth1";
  double eps = 1e-2;
  std::string well = "relu";
};

struct RateArgs {
  std::string target = "builtin:pwl4";
  std::vector<double> budgets{0.25, 0.5, 0.75, 1.0};
  std::size_t grid = 4096;
};

struct ApproxNdArgs {
  std::string target = "builtin:identity";
  std::size_t n = 2;
  double p = 2.0;
  double eps = 0.5;
  std::size_t grid_N = 0;
  std::size_t max_N = 6;
  std::optional<double> alpha;
  std::size_t samples = 100000;
  std::string terminal;  // JSON file, empty for identity
};

struct DiscretizeArgs {
  std::string schedule;
  std::size_t layers = 0;            // 0: max(1024, steps)
  std::vector<std::size_t> slopes;   // empty: four doublings from max(64, steps) rounded up to a power of two
};

struct VerifyArgs {
  std::string schedule;
  std::string target;
  double p = 2.0;
  std::size_t samples = 100000;
  std::size_t grid = 16384;
};

int run_approx1d(const Common& c, const Approx1dArgs& a);
int run_rate(const Common& c, const RateArgs& a);
int run_approxnd(const Common& c, const ApproxNdArgs& a, bool tensor);
int run_discretize(const Common& c, const DiscretizeArgs& a);
int run_verify(const Common& c, const VerifyArgs& a);
int run_selftest(const Common& c);

}  // namespace flowmap::cli
