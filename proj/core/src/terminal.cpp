#include <flowmap/terminal.hpp>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include <flowmap/errors.hpp>
#include <flowmap/integrator.hpp>
#include <flowmap/parallel.hpp>

namespace flowmap {

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols));
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j);
  return e;
}

}  // namespace

TerminalMap TerminalMap::identity(std::size_t n) { return {Matrix::identity(n), Point(n, 0.0)}; }

Point TerminalMap::operator()(std::span<const double> z) const {
  require(z.size() == in_dim(), ErrorKind::shape_mismatch, "terminal map input dimension mismatch");
  Point out = W * z;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i];
  return out;
}

bool TerminalMap::full_row_rank(double tol) const {
  if (W.rows == 0 || W.rows > W.cols) return false;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(to_eigen(W));
  lu.setThreshold(tol);
  return static_cast<std::size_t>(lu.rank()) == W.rows;
}

void TerminalMap::validate() const {
  require(W.rows >= 1 && W.cols >= 1, ErrorKind::shape_mismatch, "terminal map needs a nonempty W");
  require(c.size() == W.rows, ErrorKind::shape_mismatch, "terminal offset must have one entry per output");
  require(all_finite(W.data) && all_finite(c), ErrorKind::invalid_argument, "terminal map entries must be finite");
}

json terminal_to_json(const TerminalMap& g) { return {{"kind", "affine"}, {"W", g.W}, {"c", g.c}}; }

TerminalMap terminal_from_json(const json& j) {
  TerminalMap g;
  try {
    const std::string kind = j.at("kind").get<std::string>();
    require(kind == "affine", ErrorKind::unsupported, "unsupported terminal map kind: " + kind);
    g.W = j.at("W").get<Matrix>();
    g.c = j.at("c").get<Point>();
  } catch (const json::exception& e) {
    fail(ErrorKind::invalid_argument, std::string("bad terminal map JSON: ") + e.what());
  }
  g.validate();
  return g;
}

std::vector<Point> lift_targets(const std::vector<Point>& values, const TerminalMap& g) {
  g.validate();
  const Eigen::MatrixXd W = to_eigen(g.W);
  const Eigen::MatrixXd pinv = W.completeOrthogonalDecomposition().pseudoInverse();
  std::vector<Point> out;
  out.reserve(values.size());
  for (const auto& v : values) {
    require(v.size() == g.out_dim(), ErrorKind::shape_mismatch, "value dimension does not match the terminal map");
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) rhs(static_cast<Eigen::Index>(i)) = v[i] - g.c[i];
    const Eigen::VectorXd z = pinv * rhs;
    const double residual = (W * z - rhs).norm();
    require(residual <= 1e-9 * std::max(1.0, rhs.norm()), ErrorKind::covering_violation,
            "value is not in the range of the terminal map (residual " + std::to_string(residual) + ")");
    out.emplace_back(z.data(), z.data() + z.size());
  }
  return out;
}

LpEstimate compose_and_measure(const TerminalMap& g, const Schedule& s, const TargetSpec& F, double p,
                               std::size_t samples, std::uint64_t seed) {
  require(p >= 1.0 && std::isfinite(p), ErrorKind::invalid_argument, "p must be finite and at least 1");
  require(samples >= 2, ErrorKind::invalid_argument, "need at least two samples");
  require(s.dim() == F.in_dim() && g.in_dim() == s.dim(), ErrorKind::shape_mismatch,
          "schedule, terminal map and target dimensions disagree");
  require(g.out_dim() == F.out_dim, ErrorKind::shape_mismatch, "terminal map output does not match the target");
  const std::size_t n = F.in_dim();
  std::mt19937_64 rng(seed);
  std::vector<Point> xs(samples, Point(n));
  for (auto& x : xs)
    for (std::size_t i = 0; i < n; ++i) {
      const double u = std::generate_canonical<double, 53>(rng);
      x[i] = F.domain.lo[i] + u * (F.domain.hi[i] - F.domain.lo[i]);
    }
  std::vector<double> e(samples);
  parallel_for(samples, [&](std::size_t k) {
    const Point z = flow_eval(s, xs[k]);
    e[k] = std::pow(dist2(g(z), F(xs[k])), p);
  });
  double mean = 0.0;
  for (double v : e) mean += v;
  mean /= static_cast<double>(samples);
  double var = 0.0;
  for (double v : e) var += (v - mean) * (v - mean);
  var /= static_cast<double>(samples - 1);
  const double vol = F.domain.volume();
  LpEstimate r;
  r.samples = samples;
  r.value = std::pow(vol * mean, 1.0 / p);
  const double se_mean = std::sqrt(var / static_cast<double>(samples));
  r.std_error = mean > 0.0 ? r.value / (p * mean) * se_mean : 0.0;
  return r;
}

LpEstimate lp_error_mc(const Schedule& s, const TargetSpec& F, double p, std::size_t samples, std::uint64_t seed) {
  require(F.out_dim == F.in_dim(), ErrorKind::shape_mismatch,
          "target output dimension differs from the input; pass a terminal map");
  return compose_and_measure(TerminalMap::identity(F.in_dim()), s, F, p, samples, seed);
}

}  // namespace flowmap
