#include <flowmap/families.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include <flowmap/errors.hpp>

namespace flowmap {

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
  }
  return "unknown";
}

Activation activation_from_string(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "tanh") return Activation::tanh;
  fail(ErrorKind::invalid_argument, "unknown activation '" + std::string(s) + "'");
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double activate(Activation a, double z) noexcept {
  switch (a) {
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::sigmoid: return sigmoid(z);
    case Activation::tanh: return std::tanh(z);
  }
  return 0.0;
}

double activation_lipschitz(Activation a) noexcept {
  return a == Activation::sigmoid ? 0.25 : 1.0;
}

double sigmoid_soft_threshold(double z) noexcept {
  return 0.5 * std::min(std::max(std::abs(z) - 1.0, 0.0), 1.0);
}

double sigmoid_smn(int M, int N, double z) {
  require(M >= 1 && N >= 1, ErrorKind::invalid_argument, "sigmoid_smn needs M, N >= 1");
  double s = 0.0;
  for (int k = 1; k <= N; ++k) {
    const double q = 1.0 + static_cast<double>(k) / N;
    s += sigmoid(M * (-q - z)) + sigmoid(M * (z - q));
  }
  return s / (2.0 * N);
}

double sigmoid_smn_bound(int M, int N) {
  require(M >= 1 && N >= 1, ErrorKind::invalid_argument, "sigmoid_smn needs M, N >= 1");
  return 1.0 / N + 1.0 / (1.0 + std::exp(static_cast<double>(M) / N));
}

std::string_view to_string(Regime r) noexcept { return r == Regime::main ? "main" : "tensor"; }

namespace {

Regime regime_from_string(std::string_view s) {
  if (s == "main") return Regime::main;
  if (s == "tensor") return Regime::tensor;
  fail(ErrorKind::invalid_argument, "unknown restriction regime '" + std::string(s) + "'");
}

Structure layer_structure(const Matrix& V, const std::vector<const Matrix*>& chain) {
  // chain: matrices applied right to left after V, i.e. V * M1 * M2 ...
  const std::size_t n = V.rows;
  Structure st;
  st.n = n;
  st.moving.assign(n, 0);
  st.depends.assign(n * n, 0);
  // boolean product of sparsity patterns
  std::vector<char> reach(V.rows * V.cols);
  std::size_t cols = V.cols;
  for (std::size_t i = 0; i < V.data.size(); ++i) reach[i] = V.data[i] != 0.0;
  for (const Matrix* m : chain) {
    std::vector<char> next(n * m->cols, 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < cols; ++k) {
        if (!reach[i * cols + k]) continue;
        for (std::size_t j = 0; j < m->cols; ++j)
          if ((*m)(k, j) != 0.0) next[i * m->cols + j] = 1;
      }
    reach = std::move(next);
    cols = m->cols;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < V.cols; ++k)
      if (V(i, k) != 0.0) st.moving[i] = 1;
    for (std::size_t j = 0; j < n; ++j) st.depends[i * n + j] = st.moving[i] && reach[i * n + j];
  }
  return st;
}

class LayerField final : public FieldImpl {
 public:
  LayerField(Activation sigma, Matrix V, Matrix W, Point b)
      : sigma_(sigma), V_(std::move(V)), W_(std::move(W)), b_(std::move(b)) {
    require(V_.rows >= 1, ErrorKind::shape_mismatch, "V must have at least one row");
    require(W_.cols == V_.rows, ErrorKind::shape_mismatch, "W must have as many columns as V has rows");
    require(V_.cols == W_.rows, ErrorKind::shape_mismatch, "V columns must match W rows");
    require(b_.size() == W_.rows, ErrorKind::shape_mismatch, "b must match W rows");
  }

  std::size_t dim() const override { return V_.rows; }

  void eval(std::span<const double> z, std::span<double> out) const override {
    const std::size_t q = W_.rows;
    const std::size_t n = V_.rows;
    thread_local std::vector<double> hidden;
    hidden.resize(q);
    for (std::size_t k = 0; k < q; ++k) {
      double s = b_[k];
      for (std::size_t j = 0; j < W_.cols; ++j) s += W_(k, j) * z[j];
      hidden[k] = activate(sigma_, s);
    }
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < q; ++k) s += V_(i, k) * hidden[k];
      out[i] = s;
    }
  }

  double lipschitz_bound() const override {
    return V_.op_norm_bound() * W_.op_norm_bound() * activation_lipschitz(sigma_);
  }
  std::string family_tag() const override { return std::string(to_string(sigma_)); }
  json params() const override { return {{"V", V_}, {"W", W_}, {"b", b_}}; }
  std::string label() const override {
    return family_tag() + "(q=" + std::to_string(W_.rows) + ")";
  }
  Structure structure() const override { return layer_structure(V_, {&W_}); }
  bool has_slices() const override { return sigma_ == Activation::relu; }

  PiecewiseAffine slice(std::size_t out, std::span<const double> base,
                        std::span<const double> dir) const override {
    if (sigma_ != Activation::relu) return FieldImpl::slice(out, base, dir);
    std::vector<Hinge> hs;
    for (std::size_t k = 0; k < W_.rows; ++k) {
      const double v = V_(out, k);
      if (v == 0.0) continue;
      double u = b_[k];
      double w = 0.0;
      for (std::size_t j = 0; j < W_.cols; ++j) {
        u += W_(k, j) * base[j];
        w += W_(k, j) * dir[j];
      }
      hs.push_back({v, w, u});
    }
    return {0.0, 0.0, std::move(hs)};
  }

 private:
  Activation sigma_;
  Matrix V_, W_;
  Point b_;
};

class SigmoidSmnField final : public FieldImpl {
 public:
  SigmoidSmnField(int M, int N, std::size_t n) : M_(M), N_(N), n_(n) {
    require(M >= 1 && N >= 1, ErrorKind::invalid_argument, "sigmoid_smn needs M, N >= 1");
    require(n >= 1, ErrorKind::invalid_argument, "dimension must be positive");
  }
  std::size_t dim() const override { return n_; }
  void eval(std::span<const double> z, std::span<double> out) const override {
    double s = 0.0;
    for (std::size_t j = 0; j < n_; ++j) s += sigmoid_smn(M_, N_, z[j]);
    s /= static_cast<double>(n_);
    std::fill(out.begin(), out.end(), s);
  }
  double lipschitz_bound() const override { return M_ / 4.0; }
  std::string family_tag() const override { return "sigmoid_smn"; }
  json params() const override { return {{"M", M_}, {"N", N_}, {"dim", n_}}; }
  std::string label() const override {
    return "sigmoid_smn(M=" + std::to_string(M_) + ",N=" + std::to_string(N_) + ")";
  }

 private:
  int M_, N_;
  std::size_t n_;
};

class BlockField final : public FieldImpl {
 public:
  BlockField(Matrix V, Matrix W2, Point b2, Matrix W1, Point b1, Activation sigma, Activation outer)
      : V_(std::move(V)), W2_(std::move(W2)), W1_(std::move(W1)), b2_(std::move(b2)), b1_(std::move(b1)),
        sigma_(sigma), outer_(outer) {
    require(V_.rows >= 1, ErrorKind::shape_mismatch, "V must have at least one row");
    require(W1_.cols == V_.rows, ErrorKind::shape_mismatch, "W1 columns must equal the state dimension");
    require(b1_.size() == W1_.rows, ErrorKind::shape_mismatch, "b1 must match W1 rows");
    require(W2_.cols == W1_.rows, ErrorKind::shape_mismatch, "W2 columns must match W1 rows");
    require(b2_.size() == W2_.rows, ErrorKind::shape_mismatch, "b2 must match W2 rows");
    require(V_.cols == W2_.rows, ErrorKind::shape_mismatch, "V columns must match W2 rows");
  }
  std::size_t dim() const override { return V_.rows; }
  void eval(std::span<const double> z, std::span<double> out) const override {
    thread_local std::vector<double> u, w;
    u.resize(W1_.rows);
    w.resize(W2_.rows);
    for (std::size_t k = 0; k < W1_.rows; ++k) {
      double s = b1_[k];
      for (std::size_t j = 0; j < W1_.cols; ++j) s += W1_(k, j) * z[j];
      u[k] = activate(sigma_, s);
    }
    for (std::size_t k = 0; k < W2_.rows; ++k) {
      double s = b2_[k];
      for (std::size_t j = 0; j < W2_.cols; ++j) s += W2_(k, j) * u[j];
      w[k] = activate(outer_, s);
    }
    for (std::size_t i = 0; i < V_.rows; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < V_.cols; ++k) s += V_(i, k) * w[k];
      out[i] = s;
    }
  }
  double lipschitz_bound() const override {
    return V_.op_norm_bound() * activation_lipschitz(outer_) * W2_.op_norm_bound() *
           activation_lipschitz(sigma_) * W1_.op_norm_bound();
  }
  std::string family_tag() const override { return "block"; }
  json params() const override {
    return {{"V", V_},   {"W2", W2_}, {"b2", b2_}, {"W1", W1_}, {"b1", b1_},
            {"sigma", std::string(to_string(sigma_))}, {"outer_sigma", std::string(to_string(outer_))}};
  }
  Structure structure() const override { return layer_structure(V_, {&W2_, &W1_}); }

 private:
  Matrix V_, W2_, W1_;
  Point b2_, b1_;
  Activation sigma_, outer_;
};

class AffineField final : public FieldImpl {
 public:
  AffineField(Matrix A, Point c) : A_(std::move(A)), c_(std::move(c)) {
    require(A_.rows == A_.cols && A_.rows >= 1, ErrorKind::shape_mismatch, "A must be square");
    require(c_.size() == A_.rows, ErrorKind::shape_mismatch, "c must match A");
  }
  std::size_t dim() const override { return A_.rows; }
  void eval(std::span<const double> z, std::span<double> out) const override {
    for (std::size_t i = 0; i < A_.rows; ++i) {
      double s = c_[i];
      for (std::size_t j = 0; j < A_.cols; ++j) s += A_(i, j) * z[j];
      out[i] = s;
    }
  }
  double lipschitz_bound() const override { return A_.op_norm_bound(); }
  std::string family_tag() const override { return "affine"; }
  json params() const override { return {{"A", A_}, {"c", c_}}; }
  Structure structure() const override {
    const std::size_t n = A_.rows;
    Structure st;
    st.n = n;
    st.moving.assign(n, 0);
    st.depends.assign(n * n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      bool any = c_[i] != 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (A_(i, j) != 0.0) {
          any = true;
          st.depends[i * n + j] = 1;
        }
      st.moving[i] = any;
    }
    return st;
  }
  bool has_slices() const override { return true; }
  PiecewiseAffine slice(std::size_t out, std::span<const double> base,
                        std::span<const double> dir) const override {
    double slope = 0.0;
    double offset = c_[out];
    for (std::size_t j = 0; j < A_.cols; ++j) {
      slope += A_(out, j) * dir[j];
      offset += A_(out, j) * base[j];
    }
    return {slope, offset};
  }

 private:
  Matrix A_;
  Point c_;
};

class ComboField final : public FieldImpl {
 public:
  ComboField(std::vector<VectorField> fields, std::vector<double> weights)
      : fields_(std::move(fields)), weights_(std::move(weights)) {
    require(!fields_.empty(), ErrorKind::invalid_argument, "combo needs at least one field");
    require(fields_.size() == weights_.size(), ErrorKind::shape_mismatch, "one weight per field");
    for (const auto& f : fields_)
      require(f.dim() == fields_.front().dim(), ErrorKind::shape_mismatch, "combo fields must share dim");
  }
  std::size_t dim() const override { return fields_.front().dim(); }
  void eval(std::span<const double> z, std::span<double> out) const override {
    thread_local std::vector<double> tmp;
    tmp.resize(out.size());
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t i = 0; i < fields_.size(); ++i) {
      fields_[i].eval(z, tmp);
      for (std::size_t k = 0; k < out.size(); ++k) out[k] += weights_[i] * tmp[k];
    }
  }
  double lipschitz_bound() const override {
    double l = 0.0;
    for (std::size_t i = 0; i < fields_.size(); ++i) l += std::abs(weights_[i]) * fields_[i].lipschitz_bound();
    return l;
  }
  std::string family_tag() const override { return "combo"; }
  json params() const override {
    json fs = json::array();
    for (const auto& f : fields_) fs.push_back(field_to_json(f));
    return {{"weights", weights_}, {"fields", fs}};
  }
  Structure structure() const override {
    const std::size_t n = dim();
    Structure st;
    st.n = n;
    st.moving.assign(n, 0);
    st.depends.assign(n * n, 0);
    for (std::size_t i = 0; i < fields_.size(); ++i) {
      if (weights_[i] == 0.0) continue;
      const Structure s = fields_[i].impl().structure();
      for (std::size_t k = 0; k < n; ++k) st.moving[k] |= s.moving[k];
      for (std::size_t k = 0; k < n * n; ++k) st.depends[k] |= s.depends[k];
    }
    return st;
  }
  bool has_slices() const override {
    return std::all_of(fields_.begin(), fields_.end(), [](const VectorField& f) { return f.impl().has_slices(); });
  }
  PiecewiseAffine slice(std::size_t out, std::span<const double> base,
                        std::span<const double> dir) const override {
    PiecewiseAffine p;
    for (std::size_t i = 0; i < fields_.size(); ++i)
      if (weights_[i] != 0.0) p += fields_[i].impl().slice(out, base, dir).scaled(weights_[i]);
    return p;
  }

 private:
  std::vector<VectorField> fields_;
  std::vector<double> weights_;
};

class TensorField final : public FieldImpl {
 public:
  TensorField(VectorField g, std::size_t n) : g_(std::move(g)), n_(n) {
    require(g_.dim() == 1, ErrorKind::shape_mismatch, "tensor field needs a 1D inner field");
    require(n >= 1, ErrorKind::invalid_argument, "dimension must be positive");
  }
  std::size_t dim() const override { return n_; }
  void eval(std::span<const double> z, std::span<double> out) const override {
    for (std::size_t i = 0; i < n_; ++i) g_.eval(z.subspan(i, 1), out.subspan(i, 1));
  }
  double lipschitz_bound() const override { return g_.lipschitz_bound(); }
  std::string family_tag() const override { return "tensor"; }
  json params() const override { return {{"inner", field_to_json(g_)}, {"dim", n_}}; }
  std::string label() const override { return "tensor(" + g_.label() + ")"; }
  Structure structure() const override {
    Structure st;
    st.n = n_;
    st.moving.assign(n_, 1);
    st.depends.assign(n_ * n_, 0);
    for (std::size_t i = 0; i < n_; ++i) st.depends[i * n_ + i] = 1;
    return st;
  }
  bool has_slices() const override { return g_.impl().has_slices(); }
  PiecewiseAffine slice(std::size_t out, std::span<const double> base,
                        std::span<const double> dir) const override {
    const double b = base[out];
    const double d = dir[out];
    return g_.impl().slice(0, std::span<const double>(&b, 1), std::span<const double>(&d, 1));
  }

 private:
  VectorField g_;
  std::size_t n_;
};

class CallableField final : public FieldImpl {
 public:
  CallableField(std::size_t n, FieldFunction fn, double lip, std::string label)
      : n_(n), fn_(std::move(fn)), lip_(lip), label_(std::move(label)) {
    require(n >= 1, ErrorKind::invalid_argument, "dimension must be positive");
  }
  std::size_t dim() const override { return n_; }
  void eval(std::span<const double> z, std::span<double> out) const override { fn_(z, out); }
  double lipschitz_bound() const override { return lip_; }
  std::string family_tag() const override { return "callable"; }
  json params() const override {
    fail(ErrorKind::unsupported, "callable field '" + label_ + "' cannot be serialized");
  }
  std::string label() const override { return label_; }

 private:
  std::size_t n_;
  FieldFunction fn_;
  double lip_;
  std::string label_;
};

class RestrictedField final : public FieldImpl {
 public:
  RestrictedField(VectorField inner, AffineRestriction r) : inner_(std::move(inner)), r_(std::move(r)) {
    r_.validate();
    require(r_.dim() == inner_.dim(), ErrorKind::shape_mismatch, "restriction dimension mismatch");
  }
  std::size_t dim() const override { return r_.dim(); }
  void eval(std::span<const double> z, std::span<double> out) const override {
    const std::size_t n = dim();
    thread_local std::vector<double> arg;
    arg.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = r_.b[i];
      for (std::size_t j = 0; j < n; ++j) s += r_.A(i, j) * z[j];
      arg[i] = s;
    }
    inner_.eval(arg, out);
    for (std::size_t i = 0; i < n; ++i) out[i] = r_.D[i] == 0.0 ? 0.0 : r_.D[i] * out[i];
  }
  double lipschitz_bound() const override {
    double dmax = 0.0;
    for (double d : r_.D) dmax = std::max(dmax, std::abs(d));
    return dmax * inner_.lipschitz_bound() * r_.A.op_norm_bound();
  }
  std::string family_tag() const override { return "restricted"; }
  json params() const override {
    return {{"inner", field_to_json(inner_)},
            {"D", r_.D},
            {"A", r_.A},
            {"b", r_.b},
            {"regime", std::string(to_string(r_.regime))}};
  }
  std::string label() const override { return "restricted(" + inner_.label() + ")"; }
  Structure structure() const override {
    const std::size_t n = dim();
    const Structure in = inner_.impl().structure();
    Structure st;
    st.n = n;
    st.moving.assign(n, 0);
    st.depends.assign(n * n, 0);
    for (std::size_t k = 0; k < n; ++k) {
      st.moving[k] = r_.D[k] != 0.0 && in.moving[k];
      if (!st.moving[k]) continue;
      for (std::size_t l = 0; l < n; ++l) {
        if (!in.dep(k, l)) continue;
        for (std::size_t j = 0; j < n; ++j)
          if (r_.A(l, j) != 0.0) st.depends[k * n + j] = 1;
      }
    }
    return st;
  }
  bool has_slices() const override { return inner_.impl().has_slices(); }
  PiecewiseAffine slice(std::size_t out, std::span<const double> base,
                        std::span<const double> dir) const override {
    if (r_.D[out] == 0.0) return {};
    Point b2 = r_.A * base;
    for (std::size_t i = 0; i < b2.size(); ++i) b2[i] += r_.b[i];
    const Point d2 = r_.A * dir;
    return inner_.impl().slice(out, b2, d2).scaled(r_.D[out]);
  }

 const VectorField& inner() const { return inner_; }
  const AffineRestriction& restriction() const { return r_; }

 private:
  VectorField inner_;
  AffineRestriction r_;
};

}  // namespace

VectorField relu_field(const Matrix& V, const Matrix& W, const Point& b) {
  return VectorField(std::make_shared<LayerField>(Activation::relu, V, W, b));
}

VectorField activation_field(Activation sigma, const Matrix& V, const Matrix& W, const Point& b) {
  return VectorField(std::make_shared<LayerField>(sigma, V, W, b));
}

VectorField sigmoid_smn_field(int M, int N, std::size_t dim) {
  return VectorField(std::make_shared<SigmoidSmnField>(M, N, dim));
}

VectorField block_field(const Matrix& V, const Matrix& W2, const Point& b2, const Matrix& W1, const Point& b1,
                        Activation sigma, std::optional<Activation> outer) {
  return VectorField(std::make_shared<BlockField>(V, W2, b2, W1, b1, sigma, outer.value_or(sigma)));
}

VectorField affine_field(const Matrix& A, const Point& c) {
  return VectorField(std::make_shared<AffineField>(A, c));
}

VectorField combo_field(std::vector<VectorField> fields, std::vector<double> weights) {
  return VectorField(std::make_shared<ComboField>(std::move(fields), std::move(weights)));
}

VectorField tensor_field(const VectorField& g, std::size_t n) {
  return VectorField(std::make_shared<TensorField>(g, n));
}

VectorField callable_field(std::size_t dim, FieldFunction fn, double lipschitz, std::string label) {
  return VectorField(std::make_shared<CallableField>(dim, std::move(fn), lipschitz, std::move(label)));
}

AffineRestriction AffineRestriction::identity(std::size_t n, Regime regime) {
  return {std::vector<double>(n, 1.0), Matrix::identity(n), Point(n, 0.0), regime};
}

void AffineRestriction::validate() const {
  const std::size_t n = D.size();
  require(n >= 1, ErrorKind::shape_mismatch, "restriction needs a positive dimension");
  require(A.rows == n && A.cols == n, ErrorKind::shape_mismatch, "restriction A must be n x n");
  require(b.size() == n, ErrorKind::shape_mismatch, "restriction b must have n entries");
  for (double d : D)
    require(d == 0.0 || d == 1.0 || d == -1.0, ErrorKind::regime_violation,
            "restriction D entries must be -1, 0 or 1");
  if (regime == Regime::main) {
    require(A.is_diagonal(), ErrorKind::regime_violation, "restriction A must be diagonal in the main regime");
    for (std::size_t i = 0; i < n; ++i)
      require(std::abs(A(i, i)) <= 1.0, ErrorKind::regime_violation,
              "restriction A entries must satisfy |a| <= 1 in the main regime");
  }
  require(all_finite(b) && all_finite(A.data), ErrorKind::invalid_argument, "restriction must be finite");
}

AffineRestriction compose(const AffineRestriction& first, const AffineRestriction& second) {
  require(first.dim() == second.dim(), ErrorKind::shape_mismatch, "restriction dimension mismatch");
  // second applied to (D1 f(A1 . + b1)): D2 D1 f(A1 (A2 z + b2) + b1)
  AffineRestriction r;
  const std::size_t n = first.dim();
  r.D.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.D[i] = second.D[i] * first.D[i];
  r.A = first.A * second.A;
  r.b = first.A * second.b;
  for (std::size_t i = 0; i < n; ++i) r.b[i] += first.b[i];
  r.regime = (first.regime == Regime::tensor || second.regime == Regime::tensor) ? Regime::tensor : Regime::main;
  return r;
}

VectorField apply_restriction(const VectorField& f, const AffineRestriction& r) {
  return VectorField(std::make_shared<RestrictedField>(f, r));
}

std::optional<std::pair<VectorField, AffineRestriction>> restriction_parts(const VectorField& f) {
  const auto* r = dynamic_cast<const RestrictedField*>(&f.impl());
  if (!r) return std::nullopt;
  auto inner = restriction_parts(r->inner());
  if (!inner) return std::make_pair(r->inner(), r->restriction());
  return std::make_pair(inner->first, compose(inner->second, r->restriction()));
}

VectorField negated(const VectorField& f) {
  AffineRestriction r = AffineRestriction::identity(f.dim());
  std::fill(r.D.begin(), r.D.end(), -1.0);
  return apply_restriction(f, r);
}

Schedule inverse_schedule(const Schedule& s) {
  Schedule out(s.dim());
  for (auto it = s.steps().rbegin(); it != s.steps().rend(); ++it) out.append(negated(it->field), it->tau);
  return out;
}

json field_to_json(const VectorField& f) {
  return {{"family_tag", f.family_tag()}, {"params", f.params()}};
}

VectorField field_from_json(const json& j) {
  try {
    const std::string tag = j.at("family_tag").get<std::string>();
    const json& p = j.at("params");
    if (tag == "relu" || tag == "sigmoid" || tag == "tanh")
      return activation_field(activation_from_string(tag), p.at("V").get<Matrix>(), p.at("W").get<Matrix>(),
                              p.at("b").get<Point>());
    if (tag == "sigmoid_smn")
      return sigmoid_smn_field(p.at("M").get<int>(), p.at("N").get<int>(), p.at("dim").get<std::size_t>());
    if (tag == "block")
      return block_field(p.at("V").get<Matrix>(), p.at("W2").get<Matrix>(), p.at("b2").get<Point>(),
                         p.at("W1").get<Matrix>(), p.at("b1").get<Point>(),
                         activation_from_string(p.at("sigma").get<std::string>()),
                         activation_from_string(p.value("outer_sigma", p.at("sigma").get<std::string>())));
    if (tag == "affine") return affine_field(p.at("A").get<Matrix>(), p.at("c").get<Point>());
    if (tag == "combo") {
      std::vector<VectorField> fs;
      for (const auto& e : p.at("fields")) fs.push_back(field_from_json(e));
      return combo_field(std::move(fs), p.at("weights").get<std::vector<double>>());
    }
    if (tag == "tensor") return tensor_field(field_from_json(p.at("inner")), p.at("dim").get<std::size_t>());
    if (tag == "restricted") {
      AffineRestriction r{p.at("D").get<std::vector<double>>(), p.at("A").get<Matrix>(), p.at("b").get<Point>(),
                          regime_from_string(p.value("regime", std::string("main")))};
      return apply_restriction(field_from_json(p.at("inner")), r);
    }
    fail(ErrorKind::unsupported, "unknown family tag '" + tag + "'");
  } catch (const json::exception& e) {
    fail(ErrorKind::invalid_argument, std::string("malformed field JSON: ") + e.what());
  }
}

json schedule_to_json(const Schedule& s) {
  json steps = json::array();
  for (const auto& st : s.steps()) {
    json e = field_to_json(st.field);
    e["tau"] = st.tau;
    steps.push_back(std::move(e));
  }
  return {{"dim", s.dim()}, {"steps", steps}};
}

Schedule schedule_from_json(const json& j) {
  try {
    Schedule s(j.at("dim").get<std::size_t>());
    for (const auto& e : j.at("steps")) s.append(field_from_json(e), e.at("tau").get<double>());
    return s;
  } catch (const json::exception& e) {
    fail(ErrorKind::invalid_argument, std::string("malformed schedule JSON: ") + e.what());
  }
}

}  // namespace flowmap
