#include <flowmap/well.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <flowmap/errors.hpp>

namespace flowmap {

bool Box::contains(std::span<const double> x, double tol) const {
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
  return true;
}

Point Box::center() const {
  Point c(lo.size());
  for (std::size_t i = 0; i < lo.size(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
  return c;
}

double Box::volume() const {
  double v = 1.0;
  for (std::size_t i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
  return v;
}

namespace {

WellFunction make_well(std::size_t n, VectorField field, Box box, std::string kind, double slack = 0.0) {
  WellFunction w;
  w.dim = n;
  w.field = std::move(field);
  w.zero_box = std::move(box);
  w.signs.assign(n * n * 2, 1);
  w.certified_slack = slack;
  w.kind = std::move(kind);
  return w;
}

double inverse_activation(Activation sigma, double y) {
  switch (sigma) {
    case Activation::relu: return y;
    case Activation::sigmoid: return std::log(y / (1.0 - y));
    case Activation::tanh: return std::atanh(y);
  }
  return y;
}

}  // namespace

WellFunction relu_well_1d(double q1, double q2) {
  require(std::isfinite(q1) && std::isfinite(q2) && q1 <= q2, ErrorKind::invalid_argument,
          "well interval needs finite q1 <= q2");
  Matrix V(1, 2, 0.5);
  Matrix W = Matrix::from_rows({{-1.0}, {1.0}});
  return make_well(1, relu_field(V, W, {q1, -q2}), Box{{q1}, {q2}}, "relu");
}

WellFunction relu_well_nd(std::size_t n) {
  require(n >= 1, ErrorKind::invalid_argument, "dimension must be positive");
  Matrix V(n, 2 * n, 1.0 / (2.0 * static_cast<double>(n)));
  Matrix W(2 * n, n);
  for (std::size_t j = 0; j < n; ++j) {
    W(2 * j, j) = -1.0;
    W(2 * j + 1, j) = 1.0;
  }
  return make_well(n, relu_field(V, W, Point(2 * n, -1.0)), Box{Point(n, -1.0), Point(n, 1.0)}, "relu");
}

WellFunction sigmoid_well(int M, int N, std::size_t n) {
  return make_well(n, sigmoid_smn_field(M, N, n), Box{Point(n, -1.0), Point(n, 1.0)}, "sigmoid_smn",
                   sigmoid_smn_bound(M, N));
}

WellFunction block_well(Activation sigma, double i_lo, double i_hi, std::size_t n) {
  require(n >= 1, ErrorKind::invalid_argument, "dimension must be positive");
  require(i_lo < i_hi, ErrorKind::invalid_argument, "block well needs i_lo < i_hi");
  switch (sigma) {
    case Activation::relu:
      require(i_lo > 0.0, ErrorKind::invalid_argument, "relu block well needs I inside (0, inf)");
      break;
    case Activation::sigmoid:
      require(i_lo > 0.0 && i_hi < 1.0, ErrorKind::invalid_argument, "sigmoid block well needs I inside (0, 1)");
      break;
    case Activation::tanh:
      require(i_lo > -1.0 && i_hi < 1.0, ErrorKind::invalid_argument, "tanh block well needs I inside (-1, 1)");
      break;
  }
  const double a = 2.0 / (i_hi - i_lo);
  const double b = -(i_lo + i_hi) / (i_hi - i_lo);
  // s(y) = 1/2 [relu(y-1) - relu(y-2) + relu(-y-1) - relu(-y-2)], y = a sigma(z_j) + b
  const double vn = 1.0 / (2.0 * static_cast<double>(n));
  Matrix V(n, 4 * n);
  Matrix W2(4 * n, n);
  Point b2(4 * n);
  for (std::size_t j = 0; j < n; ++j) {
    const double sgn[4] = {a, a, -a, -a};
    const double off[4] = {b - 1.0, b - 2.0, -b - 1.0, -b - 2.0};
    const double out[4] = {vn, -vn, vn, -vn};
    for (std::size_t k = 0; k < 4; ++k) {
      W2(4 * j + k, j) = sgn[k];
      b2[4 * j + k] = off[k];
      for (std::size_t i = 0; i < n; ++i) V(i, 4 * j + k) = out[k];
    }
  }
  auto field = block_field(V, W2, b2, Matrix::identity(n), Point(n, 0.0), sigma, Activation::relu);
  const double lo = inverse_activation(sigma, i_lo);
  const double hi = inverse_activation(sigma, i_hi);
  return make_well(n, std::move(field), Box{Point(n, lo), Point(n, hi)},
                   "block_" + std::string(to_string(sigma)));
}

WellFunction shifted_well(const WellFunction& w, const Point& shift, int sign) {
  require(shift.size() == w.dim, ErrorKind::shape_mismatch, "shift must match the well dimension");
  require(sign == 1 || sign == -1, ErrorKind::invalid_argument, "sign must be +1 or -1");
  AffineRestriction r = AffineRestriction::identity(w.dim);
  std::fill(r.D.begin(), r.D.end(), static_cast<double>(sign));
  for (std::size_t i = 0; i < w.dim; ++i) r.b[i] = -shift[i];
  WellFunction out = w;
  out.field = apply_restriction(w.field, r);
  for (std::size_t i = 0; i < w.dim; ++i) {
    out.zero_box.lo[i] += shift[i];
    out.zero_box.hi[i] += shift[i];
  }
  for (int& s : out.signs) s *= sign;
  return out;
}

WellCertificate certify_well(const WellFunction& w, std::size_t samples_per_line, double extent) {
  require(samples_per_line >= 2, ErrorKind::invalid_argument, "need at least two samples per line");
  require(extent > 0.0, ErrorKind::invalid_argument, "extent must be positive");
  WellCertificate cert;
  cert.min_outside_margin = std::numeric_limits<double>::infinity();
  const std::size_t n = w.dim;
  const Point center = w.zero_box.center();
  Point x = center;
  Point h(n);
  std::ostringstream detail;
  const double inside_tol = w.zero_tolerance + w.certified_slack;
  for (std::size_t i = 0; i < n; ++i) {
    const double width = std::max(w.width(i), 1.0);
    const double lo = w.zero_box.lo[i] - extent * width;
    const double hi = w.zero_box.hi[i] + extent * width;
    const double edge_tol = 1e-12 * std::max(1.0, std::abs(w.zero_box.lo[i]) + std::abs(w.zero_box.hi[i]));
    for (std::size_t k = 0; k < samples_per_line; ++k) {
      x[i] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(samples_per_line - 1);
      w.field.eval(x, h);
      ++cert.samples;
      if (x[i] >= w.zero_box.lo[i] && x[i] <= w.zero_box.hi[i]) {
        for (double v : h) cert.max_inside = std::max(cert.max_inside, std::abs(v));
      } else if (x[i] < w.zero_box.lo[i] - edge_tol || x[i] > w.zero_box.hi[i] + edge_tol) {
        const int side = x[i] > w.zero_box.hi[i] ? 1 : 0;
        for (std::size_t c = 0; c < n; ++c)
          cert.min_outside_margin = std::min(cert.min_outside_margin, w.outside_sign(c, i, side) * h[c]);
      }
    }
    x[i] = center[i];
  }
  const bool inside_ok = cert.max_inside <= inside_tol;
  const bool outside_ok =
      w.certified_slack > 0.0 ? cert.min_outside_margin > -w.certified_slack : cert.min_outside_margin > 0.0;
  cert.passed = inside_ok && outside_ok;
  if (!inside_ok) detail << "field reaches " << cert.max_inside << " inside the zero box; ";
  if (!outside_ok) detail << "outside sign margin " << cert.min_outside_margin << "; ";
  cert.detail = detail.str();
  return cert;
}

}  // namespace flowmap
