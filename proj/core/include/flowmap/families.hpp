#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <flowmap/json.hpp>
#include <flowmap/linalg.hpp>
#include <flowmap/schedule.hpp>
#include <flowmap/vector_field.hpp>

namespace flowmap {

enum class Activation { relu, sigmoid, tanh };

[[nodiscard]] std::string_view to_string(Activation a) noexcept;
[[nodiscard]] Activation activation_from_string(std::string_view s);
[[nodiscard]] double activate(Activation a, double z) noexcept;
[[nodiscard]] double activation_lipschitz(Activation a) noexcept;

[[nodiscard]] double sigmoid(double z) noexcept;

/// s(z) = 1/2 min(max(|z| - 1, 0), 1)
[[nodiscard]] double sigmoid_soft_threshold(double z) noexcept;

/// Sigmoid sum approximating s with offsets q_k = 1 + k/N.
[[nodiscard]] double sigmoid_smn(int M, int N, double z);

/// 1/N + 1/(1 + exp(M/N)): uniform gap bound between s and sigmoid_smn.
[[nodiscard]] double sigmoid_smn_bound(int M, int N);

/// z -> V relu(W z + b); V is n x q, W is q x n.
[[nodiscard]] VectorField relu_field(const Matrix& V, const Matrix& W, const Point& b);

/// z -> V sigma(W z + b) for any supported activation.
[[nodiscard]] VectorField activation_field(Activation sigma, const Matrix& V, const Matrix& W, const Point& b);

/// Every component equals (1/n) sum_j sigmoid_smn(M, N, z_j).
[[nodiscard]] VectorField sigmoid_smn_field(int M, int N, std::size_t dim);

/// z -> V outer(W2 sigma(W1 z + b1) + b2); outer defaults to sigma.
[[nodiscard]] VectorField block_field(const Matrix& V, const Matrix& W2, const Point& b2, const Matrix& W1,
                                      const Point& b1, Activation sigma,
                                      std::optional<Activation> outer = std::nullopt);

/// z -> A z + c
[[nodiscard]] VectorField affine_field(const Matrix& A, const Point& c);

/// z -> sum_i w_i f_i(z)
[[nodiscard]] VectorField combo_field(std::vector<VectorField> fields, std::vector<double> weights);

/// z -> (g(z_1), ..., g(z_n)) for a 1D field g.
[[nodiscard]] VectorField tensor_field(const VectorField& g, std::size_t n);

using FieldFunction = std::function<void(std::span<const double>, std::span<double>)>;

/// Black-box field; cannot be serialized.
[[nodiscard]] VectorField callable_field(std::size_t dim, FieldFunction fn, double lipschitz,
                                         std::string label = "callable");

enum class Regime { main, tensor };

[[nodiscard]] std::string_view to_string(Regime r) noexcept;

/// f -> D f(A . + b)
struct AffineRestriction {
  std::vector<double> D;
  Matrix A;
  Point b;
  Regime regime = Regime::main;

  [[nodiscard]] static AffineRestriction identity(std::size_t n, Regime regime = Regime::main);
  [[nodiscard]] std::size_t dim() const noexcept { return D.size(); }
  void validate() const;
};

/// Restriction equal to applying `first` and then `second`.
[[nodiscard]] AffineRestriction compose(const AffineRestriction& first, const AffineRestriction& second);

[[nodiscard]] VectorField apply_restriction(const VectorField& f, const AffineRestriction& r);

/// Innermost field and the flattened restriction when f came from apply_restriction.
[[nodiscard]] std::optional<std::pair<VectorField, AffineRestriction>> restriction_parts(const VectorField& f);

/// -f, realized as the restriction D = -I.
[[nodiscard]] VectorField negated(const VectorField& f);

/// Reverse step order with every field negated; flows the inverse map.
[[nodiscard]] Schedule inverse_schedule(const Schedule& s);

[[nodiscard]] json field_to_json(const VectorField& f);
[[nodiscard]] VectorField field_from_json(const json& j);
[[nodiscard]] json schedule_to_json(const Schedule& s);
[[nodiscard]] Schedule schedule_from_json(const json& j);

}  // namespace flowmap
