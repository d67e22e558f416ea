#include <flowmap/splitting.hpp>

#include <cmath>
#include <algorithm>
#include <numeric>
#include <string>

#include <flowmap/errors.hpp>

namespace flowmap {

Rational rationalize(double x, std::int64_t max_den) {
  require(std::isfinite(x), ErrorKind::invalid_argument, "cannot rationalize a non-finite value");
  require(max_den >= 1, ErrorKind::invalid_argument, "denominator cap must be positive");
  // convergents h/k of the continued fraction, plus the best semiconvergent at the cap
  std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = x;
  for (int it = 0; it < 64; ++it) {
    const double a_real = std::floor(r);
    if (std::abs(a_real) > 1e15) break;
    const auto a = static_cast<std::int64_t>(a_real);
    const std::int64_t k2 = a * k1 + k0;
    if (k2 > max_den) {
      const std::int64_t m = (max_den - k0) / k1;
      const Rational semi{m * h1 + h0, m * k1 + k0};
      const Rational conv{h1, k1};
      return std::abs(semi.value() - x) < std::abs(conv.value() - x) ? semi : conv;
    }
    const std::int64_t h2 = a * h1 + h0;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    const double frac = r - a_real;
    if (frac < 1e-15) break;
    r = 1.0 / frac;
  }
  return {h1, k1};
}

Schedule average_flow_schedule(const VectorField& f, const VectorField& g, double t, int N) {
  require(N >= 1, ErrorKind::invalid_argument, "N must be at least 1");
  require(std::isfinite(t) && t >= 0.0, ErrorKind::invalid_argument, "t must be finite and nonnegative");
  require(f.dim() == g.dim(), ErrorKind::shape_mismatch, "fields must share a dimension");
  return convex_combo_schedule({f, g}, std::vector<Rational>{{1, 2}, {1, 2}}, t, N);
}

Schedule convex_combo_schedule(const std::vector<VectorField>& fields, const std::vector<Rational>& weights,
                               double t, int N, std::int64_t max_denominator) {
  require(!fields.empty(), ErrorKind::invalid_argument, "need at least one field");
  require(fields.size() == weights.size(), ErrorKind::shape_mismatch, "one weight per field");
  require(N >= 1, ErrorKind::invalid_argument, "N must be at least 1");
  require(std::isfinite(t) && t >= 0.0, ErrorKind::invalid_argument, "t must be finite and nonnegative");
  const std::size_t dim = fields.front().dim();
  for (const auto& f : fields) require(f.dim() == dim, ErrorKind::shape_mismatch, "fields must share a dimension");

  std::int64_t Q = 1;
  for (const auto& w : weights) {
    require(w.den >= 1 && w.num > 0, ErrorKind::invalid_argument, "weights must be positive rationals");
    Q = std::lcm(Q, w.den);
    require(Q <= max_denominator, ErrorKind::infeasible,
            "common denominator exceeds the cap of " + std::to_string(max_denominator));
  }
  std::vector<std::int64_t> slots;
  std::int64_t total = 0;
  for (const auto& w : weights) {
    slots.push_back(w.num * (Q / w.den));
    total += slots.back();
  }
  require(total == Q, ErrorKind::invalid_argument, "weights must sum to 1");

  // one period: round-robin over fields, r-th round takes fields with more than r slots
  std::vector<std::pair<std::size_t, std::int64_t>> period;
  const std::int64_t rounds = *std::max_element(slots.begin(), slots.end());
  for (std::int64_t r = 0; r < rounds; ++r)
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (slots[i] <= r) continue;
      if (!period.empty() && period.back().first == i)
        ++period.back().second;
      else
        period.emplace_back(i, 1);
    }

  Schedule s(dim);
  if (t == 0.0) return s;
  const double slot = t / (static_cast<double>(N) * static_cast<double>(Q));
  std::vector<std::pair<std::size_t, std::int64_t>> all;
  for (int p = 0; p < N; ++p)
    for (const auto& e : period) {
      if (!all.empty() && all.back().first == e.first)
        all.back().second += e.second;
      else
        all.push_back(e);
    }
  double used = 0.0;
  for (std::size_t k = 0; k < all.size(); ++k) {
    const double tau = k + 1 == all.size() ? t - used : static_cast<double>(all[k].second) * slot;
    s.append(fields[all[k].first], std::max(tau, 0.0));
    used += tau;
  }
  return s;
}

Schedule convex_combo_schedule(const std::vector<VectorField>& fields, const std::vector<double>& weights, double t,
                               int N, std::int64_t max_denominator) {
  require(fields.size() == weights.size(), ErrorKind::shape_mismatch, "one weight per field");
  require(!weights.empty(), ErrorKind::invalid_argument, "need at least one field");
  double sum = 0.0;
  for (double w : weights) {
    require(std::isfinite(w) && w > 0.0, ErrorKind::invalid_argument, "weights must be positive");
    sum += w;
  }
  require(std::abs(sum - 1.0) <= 1e-9, ErrorKind::invalid_argument, "weights must sum to 1");
  std::vector<Rational> rw;
  std::int64_t num = 0, den = 1;  // running sum of the rationalized weights
  for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
    const Rational r = rationalize(weights[i], max_denominator);
    rw.push_back(r);
    const std::int64_t l = std::lcm(den, r.den);
    num = num * (l / den) + r.num * (l / r.den);
    den = l;
  }
  rw.push_back({den - num, den});
  const std::int64_t g = std::gcd(rw.back().num, rw.back().den);
  if (g > 0) rw.back() = {rw.back().num / g, rw.back().den / g};
  return convex_combo_schedule(fields, rw, t, N, max_denominator);
}

}  // namespace flowmap
