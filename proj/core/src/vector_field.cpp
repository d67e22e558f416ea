#include <flowmap/vector_field.hpp>

#include <flowmap/errors.hpp>

namespace flowmap {

Structure Structure::dense(std::size_t n) {
  Structure s;
  s.n = n;
  s.moving.assign(n, 1);
  s.depends.assign(n * n, 1);
  return s;
}

PiecewiseAffine FieldImpl::slice(std::size_t, std::span<const double>, std::span<const double>) const {
  fail(ErrorKind::unsupported, "field '" + family_tag() + "' has no piecewise-affine slices");
}

std::string_view to_string(FlowPlan::Kind k) noexcept {
  switch (k) {
    case FlowPlan::Kind::identity: return "identity";
    case FlowPlan::Kind::frozen: return "frozen";
    case FlowPlan::Kind::structured: return "structured";
    case FlowPlan::Kind::numeric: return "numeric";
  }
  return "unknown";
}

FlowPlan make_flow_plan(const FieldImpl& f) {
  using Role = FlowPlan::Role;
  const std::size_t n = f.dim();
  const Structure st = f.structure();
  FlowPlan plan;
  plan.role.assign(n, Role::still);
  plan.leader.assign(n, 0);
  plan.cached.assign(n, std::nullopt);

  // moving inputs each output reads
  std::vector<std::vector<std::size_t>> reads(n);
  bool any_moving = false;
  for (std::size_t k = 0; k < n; ++k) {
    if (!st.moving[k]) continue;
    any_moving = true;
    for (std::size_t j = 0; j < n; ++j)
      if (st.moving[j] && st.dep(k, j)) reads[k].push_back(j);
  }
  if (!any_moving) {
    plan.kind = FlowPlan::Kind::identity;
    return plan;
  }

  bool all_constant = true;
  bool structured = true;
  for (std::size_t k = 0; k < n; ++k) {
    if (!st.moving[k]) continue;
    if (reads[k].empty()) {
      plan.role[k] = Role::constant;
      continue;
    }
    all_constant = false;
    if (reads[k].size() == 1 && reads[k][0] == k) {
      plan.role[k] = Role::self;
    } else if (reads[k].size() == 1) {
      const std::size_t l = reads[k][0];
      if (reads[l].size() == 1 && reads[l][0] == l) {
        plan.role[k] = Role::follower;
        plan.leader[k] = l;
      } else {
        structured = false;
      }
    } else {
      structured = false;
    }
  }
  if (all_constant) {
    plan.kind = FlowPlan::Kind::frozen;
    return plan;
  }
  if (!structured || !f.has_slices()) {
    plan.kind = FlowPlan::Kind::numeric;
    return plan;
  }
  plan.kind = FlowPlan::Kind::structured;
  // Slices of outputs reading only their own coordinate do not depend on the base point.
  Point zero(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    if (plan.role[k] != Role::self) continue;
    bool only_self = true;
    for (std::size_t j = 0; j < n; ++j)
      if (j != k && st.dep(k, j)) only_self = false;
    if (only_self) {
      Point dir(n, 0.0);
      dir[k] = 1.0;
      plan.cached[k] = f.slice(k, zero, dir);
    }
  }
  return plan;
}

VectorField::VectorField(std::shared_ptr<const FieldImpl> impl) : impl_(std::move(impl)) {
  require(impl_ != nullptr, ErrorKind::invalid_argument, "null field");
  require(impl_->dim() >= 1, ErrorKind::invalid_argument, "field dimension must be positive");
  plan_ = std::make_shared<const FlowPlan>(make_flow_plan(*impl_));
}

Point VectorField::operator()(std::span<const double> z) const {
  Point out(impl_->dim(), 0.0);
  impl_->eval(z, out);
  return out;
}

}  // namespace flowmap
