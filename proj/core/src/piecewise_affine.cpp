#include <flowmap/piecewise_affine.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace flowmap {

namespace {

// expm1(a t) / a, continuous at a = 0
double phi1(double a, double t) { return a != 0.0 ? std::expm1(a * t) / a : t; }

// Time for ds/dt = a s + c (with p0 = a s0 + c) to cover the displacement d.
double time_for(double a, double p0, double d) {
  if (a == 0.0) return d / p0;
  return std::log1p(a * d / p0) / a;
}

}  // namespace

PiecewiseAffine::PiecewiseAffine(double slope, double offset, std::vector<Hinge> hinges)
    : slope_(slope), offset_(offset), hinges_(std::move(hinges)) {
  compile();
}

void PiecewiseAffine::compile() {
  knots_.clear();
  double constant = 0.0;
  for (const auto& h : hinges_) {
    if (h.v == 0.0) continue;
    if (h.w == 0.0)
      constant += h.v * std::max(0.0, h.b);
    else
      knots_.push_back(-h.b / h.w);
  }
  std::sort(knots_.begin(), knots_.end());
  knots_.erase(std::unique(knots_.begin(), knots_.end()), knots_.end());

  const std::size_t pieces = knots_.size() + 1;
  a_.assign(pieces, slope_);
  c_.assign(pieces, offset_ + constant);
  for (const auto& h : hinges_) {
    if (h.v == 0.0 || h.w == 0.0) continue;
    const double k = -h.b / h.w;
    const auto idx = static_cast<std::size_t>(
        std::lower_bound(knots_.begin(), knots_.end(), k) - knots_.begin());
    // piece j spans (knots[j-1], knots[j]); the hinge is active right of its knot if w > 0
    for (std::size_t j = 0; j < pieces; ++j) {
      const bool active = h.w > 0.0 ? (idx < j) : (idx >= j);
      if (active) {
        a_[j] += h.v * h.w;
        c_[j] += h.v * h.b;
      }
    }
  }
}

double PiecewiseAffine::operator()(double s) const {
  double y = slope_ * s + offset_;
  for (const auto& h : hinges_) y += h.v * std::max(0.0, h.w * s + h.b);
  return y;
}

std::size_t PiecewiseAffine::piece_of(double s, int direction) const {
  if (direction > 0)
    return static_cast<std::size_t>(std::upper_bound(knots_.begin(), knots_.end(), s) - knots_.begin());
  return static_cast<std::size_t>(std::lower_bound(knots_.begin(), knots_.end(), s) - knots_.begin());
}

PiecewiseAffine PiecewiseAffine::scaled(double k) const {
  std::vector<Hinge> hs = hinges_;
  for (auto& h : hs) h.v *= k;
  return {slope_ * k, offset_ * k, std::move(hs)};
}

PiecewiseAffine PiecewiseAffine::reparametrized(double alpha, double beta) const {
  std::vector<Hinge> hs;
  hs.reserve(hinges_.size());
  for (const auto& h : hinges_) hs.push_back({h.v, h.w * alpha, h.w * beta + h.b});
  return {slope_ * alpha, slope_ * beta + offset_, std::move(hs)};
}

PiecewiseAffine& PiecewiseAffine::operator+=(const PiecewiseAffine& other) {
  slope_ += other.slope_;
  offset_ += other.offset_;
  hinges_.insert(hinges_.end(), other.hinges_.begin(), other.hinges_.end());
  compile();
  return *this;
}

double PiecewiseAffine::flow(double s0, double tau) const {
  if (!(tau > 0.0)) return s0;
  double s = s0;
  double t = tau;
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0; iter < knots_.size() + 4; ++iter) {
    const double ps = (*this)(s);
    if (ps == 0.0) return s;
    const int dir = ps > 0.0 ? 1 : -1;
    const std::size_t j = piece_of(s, dir);
    const double a = a_[j];
    const double c = c_[j];
    const double p0 = a * s + c;
    if (p0 * dir <= 0.0) return s;
    const double x = dir > 0 ? (j < knots_.size() ? knots_[j] : inf) : (j > 0 ? knots_[j - 1] : -inf);
    if (std::isfinite(x)) {
      const double px = a * x + c;
      if (px * dir > 0.0) {
        const double th = time_for(a, p0, x - s);
        if (th <= t) {
          s = x;
          t -= th;
          continue;
        }
      }
    }
    return s + p0 * phi1(a, t);
  }
  return s;
}

std::optional<double> PiecewiseAffine::hitting_time(double s0, double target) const {
  if (target == s0) return 0.0;
  const int dir = target > s0 ? 1 : -1;
  double s = s0;
  double total = 0.0;
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0; iter < knots_.size() + 4; ++iter) {
    const std::size_t j = piece_of(s, dir);
    const double a = a_[j];
    const double c = c_[j];
    const double p0 = a * s + c;
    if (p0 * dir <= 0.0) return std::nullopt;
    const double x = dir > 0 ? (j < knots_.size() ? knots_[j] : inf) : (j > 0 ? knots_[j - 1] : -inf);
    const bool target_in_piece = dir > 0 ? target <= x : target >= x;
    if (target_in_piece) {
      const double pt = a * target + c;
      if (pt * dir <= 0.0) return std::nullopt;
      return total + time_for(a, p0, target - s);
    }
    const double px = a * x + c;
    if (px * dir <= 0.0) return std::nullopt;
    total += time_for(a, p0, x - s);
    s = x;
  }
  return std::nullopt;
}

std::optional<double> PiecewiseAffine::proportional_to(const PiecewiseAffine& other, double tol) const {
  std::vector<double> xs = knots_;
  xs.insert(xs.end(), other.knots_.begin(), other.knots_.end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  if (xs.empty()) {
    xs = {0.0, 1.0};
  } else {
    const double lo = xs.front();
    const double hi = xs.back();
    xs.insert(xs.begin(), lo - 1.0);
    xs.push_back(hi + 1.0);
  }
  double best = 0.0;
  double xb = 0.0;
  double pmax = 0.0;
  for (double x : xs) {
    const double q = std::abs(other(x));
    if (q > best) {
      best = q;
      xb = x;
    }
    pmax = std::max(pmax, std::abs((*this)(x)));
  }
  if (best == 0.0) {
    if (pmax == 0.0) return 1.0;
    return std::nullopt;
  }
  const double k = (*this)(xb) / other(xb);
  const double scale = 1.0 + pmax;
  for (double x : xs)
    if (std::abs((*this)(x) - k * other(x)) > tol * scale) return std::nullopt;
  return k;
}

}  // namespace flowmap
