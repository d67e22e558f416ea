#include <flowmap/target.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

// boost 1.74 pchip calls isnan unqualified
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

#include <flowmap/csv.hpp>
#include <flowmap/errors.hpp>

namespace flowmap {

void PiecewiseLinear::validate() const {
  require(xs.size() >= 2 && xs.size() == ys.size(), ErrorKind::invalid_argument,
          "piecewise-linear data needs at least two matching nodes");
  for (std::size_t i = 1; i < xs.size(); ++i)
    require(xs[i] > xs[i - 1], ErrorKind::invalid_argument, "piecewise-linear nodes must increase");
  require(all_finite(xs) && all_finite(ys), ErrorKind::invalid_argument, "piecewise-linear data must be finite");
}

double PiecewiseLinear::operator()(double x) const {
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t j = it == xs.begin() ? 0 : static_cast<std::size_t>(it - xs.begin()) - 1;
  j = std::min(j, xs.size() - 2);
  const double t = (x - xs[j]) / (xs[j + 1] - xs[j]);
  return ys[j] + t * (ys[j + 1] - ys[j]);
}

std::vector<double> PiecewiseLinear::slopes() const {
  std::vector<double> s(xs.size() - 1);
  for (std::size_t j = 0; j + 1 < xs.size(); ++j) s[j] = (ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j]);
  return s;
}

Point TargetSpec::operator()(std::span<const double> x) const {
  require(x.size() == in_dim(), ErrorKind::shape_mismatch, "target input dimension mismatch");
  Point out(out_dim);
  fn(x, out);
  return out;
}

double TargetSpec::scalar(double x) const {
  require(in_dim() == 1 && out_dim == 1, ErrorKind::shape_mismatch, "scalar() needs a 1D target");
  double y = 0.0;
  fn(std::span<const double>(&x, 1), std::span<double>(&y, 1));
  return y;
}

TargetSpec pwl_target(std::string name, PiecewiseLinear data) {
  data.validate();
  TargetSpec t;
  t.name = std::move(name);
  t.domain = Box{{data.xs.front()}, {data.xs.back()}};
  t.out_dim = 1;
  const auto sl = data.slopes();
  t.increasing = std::all_of(sl.begin(), sl.end(), [](double s) { return s > 0.0; });
  for (double s : sl) t.lipschitz = std::max(t.lipschitz, std::abs(s));
  t.fn = [data](std::span<const double> x, std::span<double> out) { out[0] = data(x[0]); };
  t.pwl = std::move(data);
  return t;
}

TargetSpec pwl_from_log_slopes(std::string name, const std::vector<double>& u, double y0) {
  require(!u.empty(), ErrorKind::invalid_argument, "need at least one piece");
  PiecewiseLinear d;
  const std::size_t N = u.size();
  d.xs.push_back(0.0);
  d.ys.push_back(y0);
  for (std::size_t j = 0; j < N; ++j) {
    d.xs.push_back(static_cast<double>(j + 1) / static_cast<double>(N));
    d.ys.push_back(d.ys.back() + std::exp(u[j]) / static_cast<double>(N));
  }
  d.xs.back() = 1.0;
  return pwl_target(std::move(name), std::move(d));
}

namespace {

using Fn = std::function<void(std::span<const double>, std::span<double>)>;

TargetSpec smooth_1d(std::string name, std::function<double(double)> f, double lip) {
  TargetSpec t;
  t.name = std::move(name);
  t.domain = Box{{0.0}, {1.0}};
  t.out_dim = 1;
  t.increasing = true;
  t.lipschitz = lip;
  t.fn = [f = std::move(f)](std::span<const double> x, std::span<double> out) { out[0] = f(x[0]); };
  return t;
}

TargetSpec map_nd(std::string name, std::size_t n, std::size_t m, Fn f, double lip) {
  TargetSpec t;
  t.name = std::move(name);
  t.domain = Box{Point(n, 0.0), Point(n, 1.0)};
  t.out_dim = m;
  t.fn = std::move(f);
  t.lipschitz = lip;
  return t;
}

}  // namespace

std::vector<std::string> builtin_target_names(std::size_t n) {
  if (n == 1) return {"identity", "smooth1", "smooth2", "tanh", "pwl2", "pwl3", "pwl4", "pwl5", "decreasing"};
  return {"identity", "flip", "constant", "swirl", "sum"};
}

TargetSpec builtin_target(const std::string& name, std::size_t n) {
  require(n >= 1, ErrorKind::invalid_argument, "dimension must be positive");
  if (n == 1) {
    if (name == "identity") return smooth_1d(name, [](double x) { return x; }, 1.0);
    if (name == "smooth1")
      return smooth_1d(
          name, [](double x) { return x + 0.3 * std::sin(2.0 * std::numbers::pi * x) / (2.0 * std::numbers::pi * 0.9); },
          1.0 + 1.0 / 3.0);
    if (name == "smooth2") return smooth_1d(name, [](double x) { return 0.5 * (x * x + x); }, 1.5);
    if (name == "tanh")
      return smooth_1d(name, [](double x) { return 0.5 + std::tanh(3.0 * (x - 0.5)) / (2.0 * std::tanh(1.5)); },
                       1.5 / std::tanh(1.5));
    if (name == "pwl2") return pwl_from_log_slopes(name, {-0.3, 0.4});
    if (name == "pwl3") return pwl_from_log_slopes(name, {0.2, -0.3, 0.5});
    if (name == "pwl4") return pwl_from_log_slopes(name, {-0.5, -0.2, 0.1, 0.5});
    if (name == "pwl5") return pwl_from_log_slopes(name, {0.1, -0.4, 0.3, 0.6, -0.2});
    if (name == "decreasing") {
      auto t = smooth_1d(name, [](double x) { return 1.0 - x; }, 1.0);
      t.increasing = false;
      return t;
    }
  } else {
    if (name == "identity")
      return map_nd(name, n, n, [](std::span<const double> x, std::span<double> o) { std::copy(x.begin(), x.end(), o.begin()); },
                    1.0);
    if (name == "flip")
      return map_nd(
          name, n, n,
          [](std::span<const double> x, std::span<double> o) {
            std::copy(x.begin(), x.end(), o.begin());
            o[0] = -x[0];
          },
          1.0);
    if (name == "constant")
      return map_nd(
          name, n, n, [](std::span<const double>, std::span<double> o) { std::fill(o.begin(), o.end(), 0.5); }, 0.0);
    if (name == "swirl")
      return map_nd(
          name, n, n,
          [n](std::span<const double> x, std::span<double> o) {
            for (std::size_t i = 0; i < n; ++i) o[i] = x[i] + 0.25 * std::sin(std::numbers::pi * x[(i + 1) % n]);
          },
          1.0 + 0.25 * std::numbers::pi);
    if (name == "sum")
      return map_nd(
          name, n, 1,
          [](std::span<const double> x, std::span<double> o) {
            o[0] = 0.0;
            for (double v : x) o[0] += v;
          },
          std::sqrt(static_cast<double>(n)));
  }
  fail(ErrorKind::invalid_argument,
       "unknown builtin target '" + name + "' for dimension " + std::to_string(n));
}

TargetSpec target_from_csv(const std::string& path, std::size_t n) {
  require(n >= 1, ErrorKind::invalid_argument, "dimension must be positive");
  const NumericTable tab = read_numeric_csv(path);
  const std::size_t cols = tab.rows.front().size();
  require(cols > n, ErrorKind::io, path + ": need input columns followed by at least one output column");
  const std::size_t m = cols - n;
  TargetSpec t;
  t.name = "csv:" + path;
  t.out_dim = m;
  Point lo(n, std::numeric_limits<double>::infinity()), hi(n, -std::numeric_limits<double>::infinity());
  for (const auto& r : tab.rows)
    for (std::size_t i = 0; i < n; ++i) {
      lo[i] = std::min(lo[i], r[i]);
      hi[i] = std::max(hi[i], r[i]);
    }
  t.domain = Box{lo, hi};
  if (n == 1 && m == 1) {
    auto rows = tab.rows;
    std::sort(rows.begin(), rows.end());
    std::vector<double> xs, ys;
    for (const auto& r : rows) {
      require(xs.empty() || r[0] > xs.back(), ErrorKind::io, path + ": duplicate abscissa");
      xs.push_back(r[0]);
      ys.push_back(r[1]);
    }
    require(xs.size() >= 2, ErrorKind::io, path + ": need at least two samples");
    t.increasing = std::adjacent_find(ys.begin(), ys.end(), std::greater_equal<>()) == ys.end();
    for (std::size_t k = 1; k < xs.size(); ++k)
      t.lipschitz = std::max(t.lipschitz, std::abs(ys[k] - ys[k - 1]) / (xs[k] - xs[k - 1]));
    if (xs.size() < 4) {
      PiecewiseLinear d{xs, ys};
      auto out = pwl_target(t.name, d);
      return out;
    }
    using Pchip = boost::math::interpolators::pchip<std::vector<double>>;
    auto p = std::make_shared<Pchip>(std::move(xs), std::move(ys));
    const double a = lo[0], b = hi[0];
    t.fn = [p, a, b](std::span<const double> x, std::span<double> o) { o[0] = (*p)(std::clamp(x[0], a, b)); };
    return t;
  }
  auto rows = std::make_shared<const std::vector<std::vector<double>>>(tab.rows);
  t.fn = [rows, n, m](std::span<const double> x, std::span<double> o) {
    double best = std::numeric_limits<double>::infinity();
    const std::vector<double>* pick = nullptr;
    for (const auto& r : *rows) {
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) d += (r[i] - x[i]) * (r[i] - x[i]);
      if (d < best) {
        best = d;
        pick = &r;
      }
    }
    for (std::size_t k = 0; k < m; ++k) o[k] = (*pick)[n + k];
  };
  return t;
}

TargetSpec resolve_target(const std::string& spec, std::size_t n) {
  if (spec.rfind("builtin:", 0) == 0) return builtin_target(spec.substr(8), n);
  if (spec.rfind("csv:", 0) == 0) return target_from_csv(spec.substr(4), n);
  if (spec.size() > 4 && spec.substr(spec.size() - 4) == ".csv") return target_from_csv(spec, n);
  return builtin_target(spec, n);
}

}  // namespace flowmap
