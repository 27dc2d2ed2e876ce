#include "casc/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "casc/errors.hpp"
#include "casc/parallel.hpp"

namespace casc {
namespace {

CascadeConfig deterministic(const CascadeConfig& config) {
  CascadeConfig c = config;
  if (c.outage.kind != OutageKind::Deterministic) c.outage.strict = true;
  c.outage.kind = OutageKind::Deterministic;
  c.outage.epsilon = EpsilonSchedule::constant(0.0);
  return c;
}

CascadeTrace simulate(const Scenario& scenario, const CascadeConfig& config,
                      const DemandControl* control, std::uint64_t seed, std::uint64_t sim) {
  CascadeRun run;
  run.seed = seed;
  run.sim = sim;
  run.control = control;
  run.initial_flows = scenario.initial_flows;
  return run_cascade(scenario.grid, config, run);
}

int samples_of(const Objective& objective) {
  return objective.kind == ObjectiveKind::DeterministicYield ? 1 : objective.samples;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

SampleSet sample_yields(const Scenario& scenario, const ControlSchedule& schedule,
                        const Objective& objective, int workers) {
  if (objective.samples < 1) throw ConfigError("objective: samples must be >= 1");
  const AffineControl control(expand(schedule, scenario.grid));
  const DemandControl* ctl = schedule.rounds > 0 ? &control : nullptr;
  SampleSet out;
  if (objective.kind == ObjectiveKind::DeterministicYield) {
    const auto trace = simulate(scenario, deterministic(scenario.cascade), ctl, objective.seed, 0);
    out.yields.push_back(trace.terminal_yield);
    out.balanced_splits = trace.balanced_splits;
    return out;
  }
  struct Result { double yield; int splits; };
  auto results = parallel_map<Result>(
      static_cast<std::size_t>(objective.samples),
      [&](std::size_t i) {
        const auto t = simulate(scenario, scenario.cascade, ctl, objective.seed, i);
        return Result{t.terminal_yield, t.balanced_splits};
      },
      workers);
  for (const auto& r : results) {
    out.yields.push_back(r.yield);
    out.balanced_splits += r.splits;
  }
  return out;
}

double objective_value(const Objective& objective, std::span<const double> yields) {
  if (yields.empty()) throw std::invalid_argument("objective over an empty sample");
  const double n = static_cast<double>(yields.size());
  // Shifted by the first sample so identical samples average exactly.
  double shift = 0.0;
  for (double y : yields) shift += y - yields[0];
  const double mean = yields[0] + shift / n;
  double var = 0.0;
  for (double y : yields) var += (y - mean) * (y - mean);
  var /= n;
  switch (objective.kind) {
    case ObjectiveKind::DeterministicYield:
    case ObjectiveKind::Mean:
      return mean;
    case ObjectiveKind::MeanMinusVariance:
      return mean - objective.lambda * var;
    case ObjectiveKind::Sharpe:
      if (var == 0.0) throw std::domain_error("zero variance");
      return mean / var;
  }
  return mean;
}

double evaluate(const Scenario& scenario, const ControlSchedule& schedule,
                const Objective& objective, int workers) {
  const auto s = sample_yields(scenario, schedule, objective, workers);
  return objective_value(objective, s.yields);
}

namespace {

struct Enumeration {
  double best_sbar = 0.0;
  double best_value = 0.0;
};

// Coarse pass over (0.1 + 0.008 i)/(kappa - 1), then a refinement between the
// two best coarse values.
Enumeration enumerate_sbar(const Scenario& scenario, const Objective& objective,
                           const SearchOptions& options, double kappa, int which,
                           double fixed_sbar1, SearchReport& report) {
  const int R = scenario.cascade.rounds;
  auto schedule_for = [&](double sbar) {
    return which == 1 ? make_gridsearch_schedule(sbar, 0.0, R)
                      : make_gridsearch_schedule(fixed_sbar1, sbar, R);
  };
  auto run_all = [&](const std::vector<double>& sbars) {
    auto values = parallel_map<double>(
        sbars.size(),
        [&](std::size_t i) { return evaluate(scenario, schedule_for(sbars[i]), objective, 1); },
        options.workers);
    report.simulations += static_cast<long>(sbars.size()) * samples_of(objective);
    return values;
  };

  std::vector<double> coarse(101);
  for (int i = 0; i <= 100; ++i) coarse[i] = (0.1 + 0.008 * i) / (kappa - 1.0);
  const auto coarse_values = run_all(coarse);
  for (int i = 0; i <= 100; ++i)
    report.candidates.push_back({which, 1, coarse[i], coarse_values[i]});

  std::vector<int> order(101);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return coarse_values[a] > coarse_values[b]; });
  const double lo = std::min(coarse[order[0]], coarse[order[1]]);
  const double hi = std::max(coarse[order[0]], coarse[order[1]]);

  std::vector<double> fine(101);
  for (int i = 0; i <= 100; ++i) fine[i] = lo + i * (hi - lo) / 100.0;
  const auto fine_values = run_all(fine);
  Enumeration best{fine[0], fine_values[0]};
  for (int i = 0; i <= 100; ++i) {
    report.candidates.push_back({which, 2, fine[i], fine_values[i]});
    if (fine_values[i] > best.best_value) best = {fine[i], fine_values[i]};
  }
  return best;
}

}  // namespace

SearchReport grid_search(const Scenario& scenario, const Objective& objective,
                         const SearchOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const int R = scenario.cascade.rounds;
  SearchReport report;
  const ControlSchedule noop =
      R >= 2 ? make_gridsearch_schedule(0.0, 0.0, R) : ControlSchedule::none();
  const double noop_value = evaluate(scenario, noop, objective, options.workers);
  report.simulations += samples_of(objective);
  report.best = noop;
  report.best_objective = noop_value;

  if (R < 2) {
    report.wall_seconds = seconds_since(start);
    return report;
  }
  const auto det = deterministic(scenario.cascade);
  report.kappa1 = simulate(scenario, det, nullptr, objective.seed, 0).rounds.front().observed;
  report.simulations += 1;
  if (!(report.kappa1 > 1.0)) {
    report.wall_seconds = seconds_since(start);
    return report;
  }

  const auto first = enumerate_sbar(scenario, objective, options, report.kappa1, 1, 0.0, report);
  double sbar2 = 0.0;
  double value = first.best_value;
  if (R >= 3) {
    const AffineControl probe(expand(make_gridsearch_schedule(first.best_sbar, 0.0, R),
                                     scenario.grid));
    report.kappa2 = simulate(scenario, det, &probe, objective.seed, 0).rounds[1].observed;
    report.simulations += 1;
    if (report.kappa2 > 1.0) {
      const auto second =
          enumerate_sbar(scenario, objective, options, report.kappa2, 2, first.best_sbar, report);
      if (second.best_value > value) {
        sbar2 = second.best_sbar;
        value = second.best_value;
      }
    }
  }
  if (value > noop_value) {
    report.best = make_gridsearch_schedule(first.best_sbar, sbar2, R);
    report.best_objective = value;
  }
  report.wall_seconds = seconds_since(start);
  return report;
}

ControlSchedule segmentize(const ControlSchedule& base, std::vector<std::vector<int>> segments,
                           int rounds) {
  std::vector<std::vector<ControlTriple>> triples(rounds,
                                                  std::vector<ControlTriple>(segments.size()));
  for (int r = 1; r <= rounds; ++r) {
    for (std::size_t k = 0; k < segments.size(); ++k) {
      std::optional<ControlTriple> t;
      const bool same_segments = base.segments == segments;
      if (same_segments) t = base.lookup(r, INT32_MIN, static_cast<int>(k));
      else t = base.lookup(r, INT32_MIN, -1);
      if (t) triples[r - 1][k] = *t;
    }
  }
  return ControlSchedule::make_segmented(std::move(segments), std::move(triples));
}

std::vector<double> segment_coordinates(const ControlSchedule& schedule) {
  if (schedule.form() != ScheduleForm::Segmented)
    throw ConfigError("gradient search needs a segmented schedule");
  std::vector<double> x;
  for (const auto& row : schedule.by_segment)
    for (const auto& t : row) {
      const ControlTriple v = t.value_or(ControlTriple{});
      x.push_back(v.c);
      x.push_back(v.s);
    }
  return x;
}

ControlSchedule with_coordinates(const ControlSchedule& schedule, std::span<const double> x) {
  ControlSchedule out = schedule;
  std::size_t k = 0;
  for (auto& row : out.by_segment)
    for (auto& t : row) {
      ControlTriple v = t.value_or(ControlTriple{});
      v.c = x[k++];
      v.s = x[k++];
      t = v;
    }
  if (k != x.size()) throw ConfigError("coordinate vector does not match the schedule");
  return out;
}

namespace {

double fd_scale(double x, double h) { return h * std::max(std::abs(x), 0.01); }

struct Point {
  double value;
  int splits;
};

}  // namespace

Gradient estimate_gradient_fd(const Scenario& scenario, const ControlSchedule& schedule,
                              const Objective& objective, const SearchOptions& options) {
  const auto x = segment_coordinates(schedule);
  const std::size_t K = x.size();
  auto points = parallel_map<Point>(
      2 * K,
      [&](std::size_t i) {
        auto y = x;
        const std::size_t k = i / 2;
        const double d = fd_scale(x[k], options.fd_step);
        y[k] += i % 2 == 0 ? d : -d;
        const auto s = sample_yields(scenario, with_coordinates(schedule, y), objective, 1);
        return Point{objective_value(objective, s.yields), s.balanced_splits};
      },
      options.workers);
  Gradient g;
  g.values.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double d = fd_scale(x[k], options.fd_step);
    g.values[k] = (points[2 * k].value - points[2 * k + 1].value) / (2.0 * d);
    g.subgradient |= points[2 * k].splits > 0 || points[2 * k + 1].splits > 0;
  }
  g.simulations = static_cast<long>(2 * K) * samples_of(objective);
  return g;
}

SearchReport first_order_search(const Scenario& scenario, const ControlSchedule& start,
                                const Objective& objective, const SearchOptions& options) {
  const auto clock = std::chrono::steady_clock::now();
  SearchReport report;
  auto x = segment_coordinates(start);
  ControlSchedule current = start;
  double value = evaluate(scenario, current, objective, options.workers);
  report.simulations += samples_of(objective);
  report.log.push_back({0, value, 0.0});

  for (int it = 1; it <= options.max_iterations; ++it) {
    const auto g = estimate_gradient_fd(scenario, current, objective, options);
    report.simulations += g.simulations;
    report.subgradient |= g.subgradient;
    double norm = 0.0;
    for (double v : g.values) norm = std::max(norm, std::abs(v));
    if (norm == 0.0) break;

    const double mu0 = 0.1 / norm;
    std::vector<double> steps(options.line_search_steps);
    for (int k = 0; k < options.line_search_steps; ++k) steps[k] = std::ldexp(mu0, k - 6);
    auto values = parallel_map<double>(
        steps.size(),
        [&](std::size_t i) {
          auto y = x;
          for (std::size_t k = 0; k < y.size(); ++k) y[k] += steps[i] * g.values[k];
          return evaluate(scenario, with_coordinates(current, y), objective, 1);
        },
        options.workers);
    report.simulations += static_cast<long>(steps.size()) * samples_of(objective);

    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
      if (values[i] > values[best]) best = i;
    if (!(values[best] > value)) break;

    const double improvement = (values[best] - value) / std::max(std::abs(value), 1e-12);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] += steps[best] * g.values[k];
    current = with_coordinates(current, x);
    value = values[best];
    report.iterations = it;
    report.log.push_back({it, value, steps[best]});
    if (improvement < options.rel_tol) break;
  }
  report.best = current;
  report.best_objective = value;
  report.wall_seconds = seconds_since(clock);
  return report;
}

Gradient sample_path_gradient(const Scenario& scenario, const ControlSchedule& schedule,
                              std::uint64_t seed, std::uint64_t sim,
                              const SearchOptions& options) {
  if (scenario.cascade.outage.kind != OutageKind::Smoothed)
    throw ConfigError("sample-path gradients need the smoothed outage rule");
  const auto x = segment_coordinates(schedule);
  auto run_at = [&](std::span<const double> y) {
    const AffineControl control(expand(with_coordinates(schedule, y), scenario.grid));
    return simulate(scenario, scenario.cascade, &control, seed, sim);
  };
  const auto base = run_at(x);
  const std::size_t segs = schedule.segments.size();

  struct Partial {
    double value;
    int splits;
    long runs;
  };
  auto partials = parallel_map<Partial>(
      x.size(),
      [&](std::size_t k) {
        double d = fd_scale(x[k], options.fd_step);
        long runs = 0;
        for (int halving = 0; halving <= options.max_halvings; ++halving, d *= 0.5) {
          auto y = x;
          y[k] = x[k] + d;
          const auto plus = run_at(y);
          y[k] = x[k] - d;
          const auto minus = run_at(y);
          runs += 2;
          if (plus.outage_sets == base.outage_sets && minus.outage_sets == base.outage_sets)
            return Partial{(plus.terminal_yield - minus.terminal_yield) / (2.0 * d),
                           plus.balanced_splits + minus.balanced_splits, runs};
        }
        const std::size_t round = k / (2 * segs) + 1;
        const std::size_t seg = (k / 2) % segs + 1;
        throw InfeasibleError("no path-preserving step for coordinate " + std::to_string(k) +
                              " (round " + std::to_string(round) + ", segment " +
                              std::to_string(seg) + ", " + (k % 2 == 0 ? "c" : "s") + ")");
      },
      options.workers);

  Gradient g;
  g.simulations = 1;
  for (const auto& p : partials) {
    g.values.push_back(p.value);
    g.subgradient |= p.splits > 0;
    g.simulations += p.runs;
  }
  g.subgradient |= base.balanced_splits > 0;
  return g;
}

}  // namespace casc
