// casc: command-line front end for the cascade library.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "casc/config.hpp"
#include "casc/errors.hpp"
#include "casc/mip.hpp"
#include "casc/parallel.hpp"
#include "casc/powerflow.hpp"
#include "casc/report.hpp"
#include "casc/scaling_dp.hpp"
#include "casc/synthetic.hpp"

namespace fs = std::filesystem;
using namespace casc;

namespace {

struct Args {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
  std::vector<std::string> sets;
};

RunConfig resolve_config(const Args& a) {
  RunConfig c = a.config.empty() ? RunConfig{} : load_config(a.config);
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_setting(c, kv.substr(0, eq), kv.substr(eq + 1), fs::current_path());
  }
  if (a.seed) apply_setting(c, "seed", std::to_string(*a.seed));
  if (a.workers) apply_setting(c, "workers", std::to_string(*a.workers));
  validate(c);
  return c;
}

// Writes to <out>/<name>, or to stdout when --out is not given.
class Sink {
 public:
  Sink(const std::string& out, const std::string& name) {
    if (out.empty()) return;
    fs::create_directories(out);
    path_ = fs::path(out) / name;
    file_.open(path_, std::ios::binary);
    if (!file_) throw std::runtime_error("cannot open " + path_.string());
  }
  std::ostream& stream() { return path_.empty() ? std::cout : file_; }

 private:
  fs::path path_;
  std::ofstream file_;
};

ControlSchedule search_control(const RunConfig& c, const Scenario& s, SearchReport* report) {
  auto r = grid_search(s, c.objective, c.search);
  if (c.control == ControlSource::Segmented && c.cascade.rounds >= 2) {
    const auto seg = segmentize(r.best, demand_segments(s.grid, c.segments), c.cascade.rounds - 1);
    auto fo = first_order_search(s, seg, c.objective, c.search);
    fo.candidates = std::move(r.candidates);
    fo.simulations += r.simulations;
    r = std::move(fo);
  }
  const auto best = r.best;
  if (report) *report = std::move(r);
  return best;
}

ControlSchedule make_control(const RunConfig& c, const Scenario& s) {
  switch (c.control) {
    case ControlSource::None: return ControlSchedule::none();
    case ControlSource::File: return read_schedule(c.control_file, demand_segments(s.grid, c.segments));
    case ControlSource::GridSearch:
    case ControlSource::Segmented: return search_control(c, s, nullptr);
    case ControlSource::ScalingDp: break;
  }
  throw ConfigError("'control': scaling-dp is only available to simulate and scaling-dp");
}

int cmd_simulate(const RunConfig& c, const Args& a) {
  auto s = build_scenario(c);
  CascadeTrace trace;
  if (c.control == ControlSource::ScalingDp) {
    const auto beta = s.grid.injections();
    ScalingDP dp(s.grid);
    LambdaSchedule lambda;
    dp.optimal_schedule(c.cascade.rounds, c.dp_t, lambda);
    std::vector<double> scaled(beta.size());
    for (std::size_t i = 0; i < beta.size(); ++i) scaled[i] = c.dp_t * beta[i];
    const Grid g = s.grid.with_injections(scaled);
    CascadeRun run{c.seed, 0, &lambda, {}, nullptr};
    trace = run_cascade(g, c.cascade, run);
  } else {
    const auto schedule = make_control(c, s);
    const AffineControl control(expand(schedule, s.grid));
    CascadeRun run{c.seed, 0, schedule.rounds > 0 ? &control : nullptr, s.initial_flows, nullptr};
    trace = run_cascade(s.grid, c.cascade, run);
  }
  Sink sink(a.out, "trace.csv");
  write_trace(trace, sink.stream());
  return 0;
}

int cmd_contingency(const RunConfig& c, const Args& a) {
  if (c.contingency.K < 1) throw ConfigError("'contingency_k' must be >= 1 for contingency");
  ContingencyResult result;
  build_scenario(c, &result);
  Sink sink(a.out, "contingency.csv");
  write_contingency(result, sink.stream());
  return 0;
}

int cmd_search(const RunConfig& base, const Args& a, ControlSource source) {
  RunConfig c = base;
  c.control = source;
  const auto s = build_scenario(c);
  SearchReport report;
  search_control(c, s, &report);
  {
    Sink sink(a.out, "schedule.csv");
    write_schedule(report.best, sink.stream());
  }
  Sink log(a.out, "search_log.csv");
  write_search_log(report, log.stream());
  std::cerr << "objective " << format_double(report.best_objective) << ", simulations "
            << report.simulations << ", iterations " << report.iterations << ", wall "
            << report.wall_seconds << " s\n";
  return 0;
}

int cmd_scaling_dp(const RunConfig& c, const Args& a) {
  const auto s = build_scenario(c);
  ScalingDP dp(s.grid);
  const auto theta = dp.theta(c.cascade.rounds);
  {
    Sink sink(a.out, "theta.csv");
    write_pwl(theta, sink.stream());
  }
  LambdaSchedule lambda;
  const double value = dp.optimal_schedule(c.cascade.rounds, c.dp_t, lambda);
  Sink sink(a.out, "lambda.csv");
  auto& out = sink.stream();
  out << "round,buses,lambda\n";
  for (const auto& [key, l] : lambda.entries()) {
    out << key.first << ',';
    for (std::size_t k = 0; k < key.second.size(); ++k)
      out << (k ? " " : "") << s.grid.buses()[key.second[k]].id;
    out << ',' << format_double(l) << '\n';
  }
  out << "value,," << format_double(value) << '\n';
  return 0;
}

int cmd_export_mip(const RunConfig& c, const Args& a) {
  const auto s = build_scenario(c);
  const auto model = build_mip(s.grid, c.cascade.rounds);
  Sink sink(a.out, "model.lp");
  write_lp(model, sink.stream());
  return 0;
}

int cmd_evaluate(const RunConfig& c, const Args& a) {
  const auto s = build_scenario(c);
  const auto schedule = make_control(c, s);
  Objective det = c.objective;
  det.kind = ObjectiveKind::DeterministicYield;
  const double det_yield = evaluate(s, schedule, det, c.workers);
  Objective mc = c.objective;
  if (mc.kind == ObjectiveKind::DeterministicYield) mc.kind = ObjectiveKind::Mean;
  const auto samples = sample_yields(s, schedule, mc, c.workers);
  const auto report = make_report(det_yield, samples.yields);
  {
    Sink sink(a.out, "report.csv");
    write_report(report, sink.stream());
  }
  if (!a.out.empty()) {
    Sink hist(a.out, "histogram.csv");
    write_histogram(report, hist.stream());
  }
  return 0;
}

int cmd_synth(const Args& a, const SyntheticSpec& spec) {
  if (a.out.empty()) throw ConfigError("synth needs --out <dir>");
  fs::create_directories(a.out);
  const auto grid = make_synthetic_grid(spec);
  write_case(grid, fs::path(a.out) / "buses.csv", fs::path(a.out) / "lines.csv");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cascade simulation, control search and optimal shedding tools"};
  app.require_subcommand(1);
  app.fallthrough();
  Args args;
  app.add_option("--config", args.config, "key = value run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", args.seed, "master seed (overrides config)");
  app.add_option("--workers", args.workers, "worker threads (overrides config)")->check(CLI::PositiveNumber);
  app.add_option("--out", args.out, "output directory (default: primary artifact to stdout)");
  app.add_option("--set", args.sets, "extra key=value settings, applied after --config");

  auto* simulate = app.add_subcommand("simulate", "run one cascade and write its trace");
  auto* contingency = app.add_subcommand("contingency", "sample an initiating event");
  auto* gridsearch = app.add_subcommand("gridsearch", "two-pass uniform control search");
  auto* optimize = app.add_subcommand("optimize", "grid search, then segmented first-order search");
  auto* scaling = app.add_subcommand("scaling-dp", "optimal componentwise scaling");
  auto* mip = app.add_subcommand("export-mip", "write the shedding MIP in LP format");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Monte Carlo yield report");
  auto* synth = app.add_subcommand("synth", "write a synthetic grid case");
  SyntheticSpec spec;
  synth->add_option("--buses", spec.buses);
  synth->add_option("--lines", spec.lines);
  synth->add_option("--generators", spec.generators);
  synth->add_option("--loads", spec.loads);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) {
      if (args.seed) spec.seed = *args.seed;
      return cmd_synth(args, spec);
    }
    const auto config = resolve_config(args);
    if (simulate->parsed()) return cmd_simulate(config, args);
    if (contingency->parsed()) return cmd_contingency(config, args);
    if (gridsearch->parsed()) return cmd_search(config, args, ControlSource::GridSearch);
    if (optimize->parsed()) return cmd_search(config, args, ControlSource::Segmented);
    if (scaling->parsed()) return cmd_scaling_dp(config, args);
    if (mip->parsed()) return cmd_export_mip(config, args);
    if (evaluate_cmd->parsed()) return cmd_evaluate(config, args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
