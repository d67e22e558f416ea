#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include <flowmap/errors.hpp>
#include <flowmap/json.hpp>

#include "commands.hpp"

namespace {

int report_error(std::string_view kind, const std::string& message) {
  const flowmap::json err{{"error", {{"kind", kind}, {"message", message}}}};
  std::fprintf(stderr, "%s\n", err.dump().c_str());
  return 2;
}

void add_common(CLI::App* sub, flowmap::cli::Common& c) {
  sub->add_option("--out", c.out, "Run directory for config echo, reports and tables");
  sub->add_option("--seed", c.seed, "Seed for every sampled estimate");
  sub->add_flag("!--no-wall-time", c.wall_time, "Leave wall_time out of reports so reruns are byte-identical");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace flowmap::cli;
  CLI::App app{"Approximation of functions by flow maps of controlled ODEs"};
  app.require_subcommand(1);

  Common common;
  Approx1dArgs a1;
  RateArgs rate;
  ApproxNdArgs nd;
  DiscretizeArgs disc;
  VerifyArgs ver;
  double alpha = 0.0;
  double budget = -1.0;

  auto* s1 = app.add_subcommand("approx1d", "Increasing 1D target to a flow map within eps");
  s1->add_option("--target", a1.target, "builtin:NAME, NAME, csv:PATH or PATH.csv");
  s1->add_option("--eps", a1.eps)->check(CLI::PositiveNumber);
  s1->add_option("--well", a1.well, "relu, block or sigmoid");
  add_common(s1, common);

  auto* sr = app.add_subcommand("rate", "Budgeted error sweep over total times T");
  sr->add_option("--target", rate.target);
  sr->add_option("--budgets", rate.budgets, "Comma separated list of T")->delimiter(',');
  sr->add_option("--budget", budget, "Single T");
  sr->add_option("--grid", rate.grid, "Points of the sup-error grid");
  add_common(sr, common);

  auto add_nd = [&](CLI::App* sub) {
    sub->add_option("--target", nd.target);
    sub->add_option("--n", nd.n)->check(CLI::Range(1, 8));
    sub->add_option("--p", nd.p)->check(CLI::Range(1.0, 1e6));
    sub->add_option("--eps", nd.eps)->check(CLI::PositiveNumber);
    sub->add_option("--grid-N", nd.grid_N, "Grid size; 0 picks the smallest admissible");
    sub->add_option("--max-N", nd.max_N);
    sub->add_option("--alpha", alpha, "Shrink factor in (0, 1); must meet the leakage bound");
    sub->add_option("--samples", nd.samples, "Monte Carlo samples");
    sub->add_option("--terminal", nd.terminal, "Terminal map JSON {kind, W, c}");
    add_common(sub, common);
  };
  auto* sn = app.add_subcommand("approxnd", "L^p approximation in n dimensions with the well family");
  add_nd(sn);
  auto* st = app.add_subcommand("tensor", "L^p approximation with the tensor-product family");
  add_nd(st);

  auto* sd = app.add_subcommand("discretize", "Euler export of a schedule and truncation slope");
  sd->add_option("--schedule", disc.schedule)->required();
  sd->add_option("--layers", disc.layers, "Layer count S; default max(1024, steps)");
  sd->add_option("--slopes", disc.slopes, "Layer counts for the slope fit")->delimiter(',');
  add_common(sd, common);

  auto* sv = app.add_subcommand("verify", "Error, monotonicity and Jacobian signs of a schedule");
  sv->add_option("--schedule", ver.schedule)->required();
  sv->add_option("--target", ver.target)->required();
  sv->add_option("--p", ver.p);
  sv->add_option("--samples", ver.samples);
  sv->add_option("--grid", ver.grid);
  add_common(sv, common);

  auto* ss = app.add_subcommand("selftest", "Run every acceptance criterion");
  add_common(ss, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("usage", e.what());
  }

  try {
    if (*s1) return run_approx1d(common, a1);
    if (*sr) {
      if (budget >= 0.0) rate.budgets = {budget};
      return run_rate(common, rate);
    }
    if (*sn || *st) {
      if ((*sn ? sn : st)->count("--alpha") > 0) nd.alpha = alpha;
      return run_approxnd(common, nd, st->parsed());
    }
    if (*sd) return run_discretize(common, disc);
    if (*sv) return run_verify(common, ver);
    if (*ss) return run_selftest(common);
  } catch (const flowmap::FlowmapError& e) {
    return report_error(flowmap::to_string(e.kind()), e.what());
  } catch (const std::exception& e) {
    return report_error("internal", e.what());
  }
  return 2;
}
