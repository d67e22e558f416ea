#include <flowmap/discretize.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <flowmap/errors.hpp>
#include <flowmap/families.hpp>
#include <flowmap/parallel.hpp>

namespace flowmap {

namespace {

constexpr double noise_floor = 1e-13;

}  // namespace

std::vector<double> ResNetExport::delta_list() const {
  std::vector<double> d;
  d.reserve(layers.size());
  for (const auto& l : layers) d.push_back(l.delta);
  return d;
}

Point ResNetExport::forward(Point z) const {
  if (z.size() != dim) fail(ErrorKind::shape_mismatch, "network input has the wrong dimension");
  Point f(dim);
  for (const auto& l : layers) {
    l.field.eval(z, f);
    for (std::size_t k = 0; k < dim; ++k) z[k] += l.delta * f[k];
  }
  return z;
}

std::vector<Point> ResNetExport::forward_batch(const std::vector<Point>& zs) const {
  std::vector<Point> out(zs.size());
  parallel_for(zs.size(), [&](std::size_t i) { out[i] = forward(zs[i]); });
  return out;
}

std::vector<std::size_t> allocate_layers(const Schedule& s, std::size_t S) {
  const std::size_t k = s.size();
  if (S < k) fail(ErrorKind::invalid_argument, "layer count is smaller than the number of schedule steps");
  std::vector<std::size_t> n(k, 1);
  const double T = s.total_time();
  if (k == 0 || T <= 0.0) {
    if (k > 0) n[0] += S - k;
    return n;
  }
  const std::size_t spare = S - k;
  std::vector<double> rem(k);
  std::size_t used = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double quota = static_cast<double>(spare) * s.steps()[i].tau / T;
    const auto whole = static_cast<std::size_t>(std::floor(quota));
    n[i] += whole;
    used += whole;
    rem[i] = quota - static_cast<double>(whole);
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t i = 0; used < spare; ++i, ++used) ++n[order[i % k]];
  return n;
}

ResNetExport euler_discretize(const Schedule& s, std::size_t S) {
  const auto n = allocate_layers(s, S);
  ResNetExport r;
  r.dim = s.dim();
  r.source_T = s.total_time();
  r.layers.reserve(S);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Step& st = s.steps()[i];
    const double delta = st.tau / static_cast<double>(n[i]);
    for (std::size_t l = 0; l < n[i]; ++l) r.layers.push_back({st.field, delta, i});
  }
  // an empty schedule still exports S identity layers
  if (s.empty())
    for (std::size_t l = 0; l < S; ++l) r.layers.push_back({affine_field(Matrix(r.dim, r.dim), Point(r.dim, 0.0)), 0.0, 0});
  return r;
}

json resnet_to_json(const ResNetExport& r) {
  json layers = json::array();
  std::vector<std::size_t> steps;
  for (const auto& l : r.layers) {
    layers.push_back({{"tag", l.field.family_tag()}, {"params", l.field.params()}});
    steps.push_back(l.step);
  }
  return {{"format", "flowmap.resnet"},
          {"version", ResNetExport::format_version},
          {"dim", r.dim},
          {"delta_list", r.delta_list()},
          {"layers", std::move(layers)},
          {"meta", {{"source_T", r.source_T}, {"S", r.S()}, {"steps", steps}}}};
}

ResNetExport resnet_from_json(const json& j) {
  try {
    if (j.value("format", std::string()) != "flowmap.resnet")
      fail(ErrorKind::invalid_argument, "not a flowmap.resnet document");
    if (j.at("version").get<int>() != ResNetExport::format_version)
      fail(ErrorKind::unsupported, "unsupported resnet export version");
    ResNetExport r;
    r.dim = j.at("dim").get<std::size_t>();
    r.source_T = j.at("meta").at("source_T").get<double>();
    const auto deltas = j.at("delta_list").get<std::vector<double>>();
    const json& layers = j.at("layers");
    if (layers.size() != deltas.size()) fail(ErrorKind::invalid_argument, "delta_list and layers differ in length");
    const json& meta = j.at("meta");
    const auto steps = meta.contains("steps") ? meta.at("steps").get<std::vector<std::size_t>>()
                                              : std::vector<std::size_t>(layers.size(), 0);
    for (std::size_t i = 0; i < layers.size(); ++i) {
      VectorField f = field_from_json({{"family_tag", layers[i].at("tag")}, {"params", layers[i].at("params")}});
      if (f.dim() != r.dim) fail(ErrorKind::shape_mismatch, "layer dimension differs from the export");
      r.layers.push_back({std::move(f), deltas[i], steps.at(i)});
    }
    return r;
  } catch (const json::exception& e) {
    fail(ErrorKind::invalid_argument, std::string("malformed resnet JSON: ") + e.what());
  }
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) fail(ErrorKind::invalid_argument, "slope fit needs two or more points");
  double mx = 0.0, my = 0.0;
  const auto m = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]) / m;
    my += std::log(y[i]) / m;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

std::vector<Point> probe_grid(std::size_t dim, std::size_t per_axis, double lo, double hi) {
  if (per_axis < 2) fail(ErrorKind::invalid_argument, "probe grid needs two points per axis");
  std::size_t total = 1;
  for (std::size_t k = 0; k < dim; ++k) total *= per_axis;
  std::vector<Point> pts(total, Point(dim));
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t r = i;
    for (std::size_t k = 0; k < dim; ++k) {
      pts[i][k] = lo + (hi - lo) * static_cast<double>(r % per_axis) / static_cast<double>(per_axis - 1);
      r /= per_axis;
    }
  }
  return pts;
}

SlopeReport truncation_slope(const Schedule& s, const std::vector<std::size_t>& S_list,
                             const std::vector<Point>& probes, const IntegratorConfig& cfg) {
  SlopeReport rep;
  rep.S_list = S_list;
  const auto exact = flow_eval_batch(s, probes, cfg);
  for (std::size_t S : S_list) {
    const auto net = euler_discretize(s, S).forward_batch(probes);
    double e = 0.0;
    for (std::size_t i = 0; i < probes.size(); ++i) e = std::max(e, dist2(net[i], exact[i]));
    rep.errors.push_back(e);
  }
  for (std::size_t i = 1; i < rep.errors.size(); ++i)
    if (rep.errors[i] > rep.errors[i - 1]) rep.monotone = false;
  rep.degenerate = std::all_of(rep.errors.begin(), rep.errors.end(), [](double e) { return e <= noise_floor; });
  if (!rep.degenerate && S_list.size() >= 2) {
    std::vector<double> x(S_list.begin(), S_list.end());
    std::vector<double> y = rep.errors;
    for (double& v : y) v = std::max(v, noise_floor);
    rep.slope = loglog_slope(x, y);
  }
  return rep;
}

json slope_report_to_json(const SlopeReport& r) {
  return {{"S_list", r.S_list},
          {"errors", r.errors},
          {"slope", r.degenerate ? json(nullptr) : json(r.slope)},
          {"degenerate", r.degenerate},
          {"monotone", r.monotone}};
}

}  // namespace flowmap
