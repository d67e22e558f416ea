#pragma once

#include <optional>
#include <vector>

namespace flowmap {

/// v * relu(w * s + b)
struct Hinge {
  double v = 0.0;
  double w = 0.0;
  double b = 0.0;
};

/**
 * @brief Continuous piecewise-affine scalar function
 *   p(s) = slope * s + offset + sum_k v_k relu(w_k s + b_k).
 *
 * Besides evaluation it integrates the scalar ODE ds/dt = p(s) exactly,
 * piece by piece, which is what makes ReLU-built flows closed form.
 */
class PiecewiseAffine {
 public:
  PiecewiseAffine() { compile(); }
  PiecewiseAffine(double slope, double offset, std::vector<Hinge> hinges = {});

  [[nodiscard]] double operator()(double s) const;

  [[nodiscard]] double slope() const noexcept { return slope_; }
  [[nodiscard]] double offset() const noexcept { return offset_; }
  [[nodiscard]] const std::vector<Hinge>& hinges() const noexcept { return hinges_; }
  [[nodiscard]] const std::vector<double>& knots() const noexcept { return knots_; }

  /// Per-piece coefficients: on piece j, p(s) = piece_slope(j) * s + piece_intercept(j).
  [[nodiscard]] std::size_t piece_count() const noexcept { return a_.size(); }
  [[nodiscard]] double piece_slope(std::size_t j) const { return a_[j]; }
  [[nodiscard]] double piece_intercept(std::size_t j) const { return c_[j]; }

  [[nodiscard]] PiecewiseAffine scaled(double k) const;
  /// s -> p(alpha * s + beta)
  [[nodiscard]] PiecewiseAffine reparametrized(double alpha, double beta) const;
  PiecewiseAffine& operator+=(const PiecewiseAffine& other);

  /// Exact solution of ds/dt = p(s), s(0) = s0, at time tau >= 0.
  [[nodiscard]] double flow(double s0, double tau) const;

  /// Time for the flow from s0 to reach target, if it ever does.
  [[nodiscard]] std::optional<double> hitting_time(double s0, double target) const;

  /// If p == k * other identically (within tol, relative), returns k.
  [[nodiscard]] std::optional<double> proportional_to(const PiecewiseAffine& other,
                                                      double tol = 1e-12) const;

 private:
  void compile();
  [[nodiscard]] std::size_t piece_of(double s, int direction) const;

  double slope_ = 0.0;
  double offset_ = 0.0;
  std::vector<Hinge> hinges_;
  std::vector<double> knots_;
  std::vector<double> a_;
  std::vector<double> c_;
};

}  // namespace flowmap
