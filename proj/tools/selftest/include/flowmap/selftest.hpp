#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <flowmap/json.hpp>

namespace flowmap {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string summary;  // deterministic, no timings
  double seconds = 0.0;
  double time_limit = 0.0;  // 0: no limit
  json detail;
};

struct SelftestOptions {
  std::uint64_t seed = 1;
  bool check_determinism = true;
  std::function<void(const CriterionResult&)> on_result;
};

struct SelftestResult {
  std::vector<CriterionResult> criteria;
  json report;  // first run, timings excluded

  [[nodiscard]] bool all_passed() const;
};

/// Runs the acceptance criteria; the determinism criterion repeats the suite and compares reports.
[[nodiscard]] SelftestResult run_selftest(const SelftestOptions& opt = {});

[[nodiscard]] json selftest_report(const std::vector<CriterionResult>& criteria, std::uint64_t seed);

/// "PASS  3 splitting rate: ..." with the timing appended.
[[nodiscard]] std::string format_line(const CriterionResult& r);

}  // namespace flowmap
