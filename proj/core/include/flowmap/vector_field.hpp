#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <flowmap/json.hpp>
#include <flowmap/linalg.hpp>
#include <flowmap/piecewise_affine.hpp>

namespace flowmap {

/// Sparsity of a field: which outputs can be nonzero and which inputs they read.
struct Structure {
  std::size_t n = 0;
  std::vector<char> moving;   // n
  std::vector<char> depends;  // n x n, row = output, col = input

  [[nodiscard]] static Structure dense(std::size_t n);
  [[nodiscard]] bool dep(std::size_t out, std::size_t in) const { return depends[out * n + in] != 0; }
};

/// Implementation interface behind VectorField. Implementations are immutable.
class FieldImpl {
 public:
  virtual ~FieldImpl() = default;

  [[nodiscard]] virtual std::size_t dim() const = 0;
  virtual void eval(std::span<const double> z, std::span<double> out) const = 0;
  [[nodiscard]] virtual double lipschitz_bound() const = 0;
  [[nodiscard]] virtual std::string family_tag() const = 0;
  [[nodiscard]] virtual json params() const = 0;
  [[nodiscard]] virtual std::string label() const { return family_tag(); }

  [[nodiscard]] virtual Structure structure() const { return Structure::dense(dim()); }

  /// True when slice() is implemented, i.e. the field is piecewise affine.
  [[nodiscard]] virtual bool has_slices() const { return false; }

  /// s -> out-th component of f(base + s * dir), as a piecewise-affine function.
  [[nodiscard]] virtual PiecewiseAffine slice(std::size_t out, std::span<const double> base,
                                              std::span<const double> dir) const;
};

/// How a single step of this field is integrated.
struct FlowPlan {
  enum class Kind { identity, frozen, structured, numeric };
  enum class Role : char { still, constant, self, follower };

  Kind kind = Kind::numeric;
  std::vector<Role> role;                             // per coordinate
  std::vector<std::size_t> leader;                    // follower -> leader
  std::vector<std::optional<PiecewiseAffine>> cached;  // base-independent self slices
};

[[nodiscard]] std::string_view to_string(FlowPlan::Kind k) noexcept;

/// Handle to an immutable vector field on R^dim.
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(std::shared_ptr<const FieldImpl> impl);

  [[nodiscard]] std::size_t dim() const { return impl_->dim(); }
  [[nodiscard]] Point operator()(std::span<const double> z) const;
  [[nodiscard]] Point operator()(std::initializer_list<double> z) const {
    return (*this)(std::span<const double>(z.begin(), z.size()));
  }
  void eval(std::span<const double> z, std::span<double> out) const { impl_->eval(z, out); }
  [[nodiscard]] double lipschitz_bound() const { return impl_->lipschitz_bound(); }
  [[nodiscard]] std::string label() const { return impl_->label(); }
  [[nodiscard]] std::string family_tag() const { return impl_->family_tag(); }
  [[nodiscard]] json params() const { return impl_->params(); }

  [[nodiscard]] const FieldImpl& impl() const { return *impl_; }
  [[nodiscard]] const std::shared_ptr<const FieldImpl>& shared() const { return impl_; }
  [[nodiscard]] const FlowPlan& plan() const { return *plan_; }
  [[nodiscard]] explicit operator bool() const { return impl_ != nullptr; }

 private:
  std::shared_ptr<const FieldImpl> impl_;
  std::shared_ptr<const FlowPlan> plan_;
};

[[nodiscard]] FlowPlan make_flow_plan(const FieldImpl& f);

}  // namespace flowmap
