#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <flowmap/json.hpp>

namespace flowmap {

using Point = std::vector<double>;

/// Dense row-major matrix, sized for the small systems used here.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  [[nodiscard]] double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  [[nodiscard]] static Matrix identity(std::size_t n);
  [[nodiscard]] static Matrix diagonal(const std::vector<double>& d);
  [[nodiscard]] static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  [[nodiscard]] bool is_diagonal() const;
  [[nodiscard]] bool is_zero() const;
  [[nodiscard]] Matrix transposed() const;
  [[nodiscard]] std::vector<std::vector<double>> to_rows() const;

  /// Upper bound on the spectral norm: min(Frobenius, sqrt(|.|_1 |.|_inf)).
  [[nodiscard]] double op_norm_bound() const;
};

[[nodiscard]] Matrix operator*(const Matrix& a, const Matrix& b);
[[nodiscard]] Point operator*(const Matrix& a, std::span<const double> x);

void to_json(json& j, const Matrix& m);
void from_json(const json& j, Matrix& m);

[[nodiscard]] double norm2(std::span<const double> x);
[[nodiscard]] double norm_inf(std::span<const double> x);
[[nodiscard]] double dist2(std::span<const double> a, std::span<const double> b);
[[nodiscard]] bool all_finite(std::span<const double> x);

}  // namespace flowmap
