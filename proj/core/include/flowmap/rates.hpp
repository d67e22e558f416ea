#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <flowmap/integrator.hpp>
#include <flowmap/schedule.hpp>
#include <flowmap/target.hpp>

namespace flowmap {

/// u = ln(phi') on [0, 1], stored piecewise constant on `breaks`.
struct LogDerivativeProfile {
  std::vector<double> breaks;  // pieces() + 1 nodes from 0 to 1
  std::vector<double> u;       // one value per piece
  bool piecewise_constant = true;  // false: u holds samples of a smooth profile
  double tv = 0.0;                 // with the zero extension outside [0, 1]
  double tv_interior = 0.0;
  double quantization_error = 0.0;  // sup |u - stored u|, 0 when exact
  double max_derivative = 0.0;      // sup phi'

  [[nodiscard]] std::size_t pieces() const noexcept { return u.size(); }
  [[nodiscard]] double value(double x) const;
};

/// Exact for piecewise-linear targets; sampled (adaptively refined) otherwise.
[[nodiscard]] LogDerivativeProfile tv_log_derivative(const TargetSpec& phi, std::size_t max_samples = 1u << 20);

[[nodiscard]] LogDerivativeProfile profile_from_pieces(std::vector<double> breaks, std::vector<double> u);

/// Piecewise-constant profile from midpoint values of ln phi' on `cells` equal cells.
[[nodiscard]] LogDerivativeProfile quantize_profile(const TargetSpec& phi, std::size_t cells);

enum class JumpSide { right, left };

/// right: adds `height` to u on (location, inf); left: adds `height` on (-inf, location).
struct HeavisideJump {
  double location = 0.0;
  double height = 0.0;
  JumpSide side = JumpSide::right;
};

struct HeavisideDecomposition {
  std::vector<HeavisideJump> jumps;
  double cost = 0.0;  // sum |height|
};

/**
 * @brief extended: right jumps only, including u(0+) at 0 and -u(1-) at 1,
 * cost equals the extended TV and the compiled map fixes 0.
 * minimal: jumps may act to either side; cost is the interior TV plus the
 * part of the level that no split of the interior jumps can absorb.
 * open_right: extended without the closing jump, so the last slope continues
 * past the right end.
 */
enum class CompileMode { extended, minimal, open_right };

[[nodiscard]] HeavisideDecomposition heaviside_decomposition(const LogDerivativeProfile& p, CompileMode mode);

/// One ReLU stage per jump, |v| = |w| = 1.
[[nodiscard]] VectorField heaviside_stage_field(double kink, JumpSide side, double height);

/// Shift x -> x + delta on [lo, hi] in total time `slack`.
[[nodiscard]] Schedule translation_gadget(double delta, double slack, double lo = 0.0, double hi = 1.0);

struct CompiledFlow {
  Schedule schedule{1};
  HeavisideDecomposition decomposition;
  double anchor_shift = 0.0;  // translation applied by the gadget
  double gadget_time = 0.0;
};

/// Flow map with ln(psi') = u and psi(0) = anchor.
[[nodiscard]] CompiledFlow compile_heaviside_flow(const LogDerivativeProfile& p, double anchor,
                                                  CompileMode mode = CompileMode::extended, double slack = 1e-6);

struct GammaResult {
  double gamma = 0.0;
  bool exact = false;   // false: an upper bound
  std::string method;   // "feasible", "monotone", "unimodal", "tube"
  std::vector<double> v;  // a feasible profile at this gamma, same pieces as u
};

/// inf ||u - v||_inf subject to interior TV(v) <= T.
[[nodiscard]] GammaResult gamma_relaxed(const LogDerivativeProfile& p, double T);

/// Minimal interior TV of v with |v - u| <= g piecewise; v is written when non-null.
[[nodiscard]] double tube_min_tv(const std::vector<double>& u, double g, std::vector<double>* v = nullptr);

/// [exp(gamma) - 1] * sup phi'.
[[nodiscard]] double budgeted_error_bound(const TargetSpec& phi, double T);

struct BudgetResult {
  double T = 0.0;
  double gamma = 0.0;
  bool gamma_exact = false;
  double bound = 0.0;
  double measured_error = 0.0;
  double total_time = 0.0;
  Schedule schedule{1};
};

/// Builds v, compiles it with budget T (gadget slack included) and measures the sup error.
[[nodiscard]] BudgetResult budgeted_approximation(const TargetSpec& phi, double T, std::size_t grid = 4096,
                                                  double slack = 1e-6);

}  // namespace flowmap
