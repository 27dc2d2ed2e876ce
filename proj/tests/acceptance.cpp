// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance [--expect-fail 8,...] [--only 3]
// Exits 0 when exactly the expected criteria fail.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "casc/cascade.hpp"
#include "casc/contingency.hpp"
#include "casc/control.hpp"
#include "casc/mip.hpp"
#include "casc/optimizer.hpp"
#include "casc/powerflow.hpp"
#include "casc/report.hpp"
#include "casc/scaling_dp.hpp"
#include "casc/synthetic.hpp"
#include "support.hpp"

using namespace casc;
using Clock = std::chrono::steady_clock;

namespace {

CascadeConfig horizon(int R) {
  CascadeConfig c;
  c.rounds = R;
  return c;
}

// Tolerances.
constexpr double kFlowResidual = 1e-8;
constexpr double kPermutation = 1e-9;
constexpr double kTriangle = 1e-10;
constexpr double kAnchor = 1e-12;
constexpr double kTerminate = 0.01;
constexpr double kDpOracle = 1e-9;
constexpr double kMip = 1e-9;
constexpr double kGradient = 1e-4;
constexpr double kSearch = 1e-3;

double seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

std::vector<double> times(std::vector<double> v, double t) {
  for (double& x : v) x *= t;
  return v;
}

Grid limited(std::mt19937_64& rng, int n, int m, double lo, double hi, double floor) {
  const auto g = support::random_connected(rng, n, m);
  const auto f = support::dense_flows(g, g.injections());
  std::uniform_real_distribution<double> k(lo, hi);
  std::vector<double> u(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) u[j] = std::abs(f[j]) * k(rng) + floor;
  return support::with_limits(g, u);
}

bool same_trace(const CascadeTrace& a, const CascadeTrace& b) {
  if (a.rounds.size() != b.rounds.size() || a.outage_sets != b.outage_sets) return false;
  for (std::size_t r = 0; r < a.rounds.size(); ++r)
    if (a.rounds[r].kappa != b.rounds[r].kappa || a.rounds[r].yield != b.rounds[r].yield ||
        a.rounds[r].islands != b.rounds[r].islands)
      return false;
  return a.final_demand == b.final_demand;
}

// ---------------------------------------------------------------------------

Outcome c1_powerflow() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  double kcl = 0.0, ohm = 0.0, perm = 0.0, scale = 0.0;
  for (int k = 0; k < 200; ++k) {
    const int n = 2 + static_cast<int>(rng() % 49);
    const int m = n - 1 + static_cast<int>(rng() % (n + 1));
    const auto g = support::random_connected(rng, n, m);
    const auto beta = g.injections();
    const auto s = solve_grid(g, beta);

    std::vector<double> net(n, 0.0);
    for (int j = 0; j < g.line_count(); ++j) {
      net[g.tail(j)] += s.flows[j];
      net[g.head(j)] -= s.flows[j];
      const double drop = s.phases[g.tail(j)] - s.phases[g.head(j)];
      ohm = std::max(ohm, std::abs(s.flows[j] * g.lines()[j].reactance - drop));
    }
    for (int v = 0; v < n; ++v) kcl = std::max(kcl, std::abs(net[v] - beta[v]));

    // Relabel buses and renumber lines; flows follow the lines.
    std::vector<int> bus_map(n), line_map(g.line_count());
    std::iota(bus_map.begin(), bus_map.end(), 0);
    std::iota(line_map.begin(), line_map.end(), 0);
    std::shuffle(bus_map.begin(), bus_map.end(), rng);
    std::shuffle(line_map.begin(), line_map.end(), rng);
    std::vector<Bus> buses;
    for (const auto& b : g.buses()) buses.push_back({bus_map[b.id] + 100, b.beta, b.max_supply});
    std::vector<Line> lines;
    for (const auto& l : g.lines())
      lines.push_back({line_map[l.id], bus_map[l.tail] + 100, bus_map[l.head] + 100, l.reactance,
                       l.flow_limit});
    const Grid h(buses, lines);
    const auto sh = solve_grid(h, h.injections());
    for (int j = 0; j < g.line_count(); ++j)
      perm = std::max(perm, std::abs(sh.flows[h.line_index(line_map[j])] - s.flows[j]));

    for (double t : {0.0, 0.5, 2.0, 10.0}) {
      const auto st = solve_grid(g, times(beta, t));
      for (int j = 0; j < g.line_count(); ++j)
        scale = std::max(scale, std::abs(st.flows[j] - t * s.flows[j]) / std::max(1.0, std::abs(t * s.flows[j])));
    }
  }
  const double wall = seconds(t0);
  std::ostringstream d;
  d << "kcl " << kcl << ", ohm " << ohm << ", permutation " << perm << ", scaling " << scale
    << ", " << wall << " s";
  return {kcl <= kFlowResidual && ohm <= kFlowResidual && perm <= kPermutation &&
              scale <= kFlowResidual && wall < 10.0,
          d.str()};
}

Outcome c2_triangle() {
  const auto g = support::triangle();
  const auto f = solve_grid(g, g.injections()).flows;
  const double err = std::max({std::abs(f[0] - 2.0), std::abs(f[1] + 1.0), std::abs(f[2] + 1.0)});
  std::ostringstream d;
  d << "max error " << err;
  return {err <= kTriangle, d.str()};
}

Outcome c3_collapse() {
  std::mt19937_64 rng(1003);
  int same = 0, cascades = 0;
  for (int k = 0; k < 50; ++k) {
    const auto g = limited(rng, 8 + k % 8, 14 + k % 10, 0.5, 1.4, 0.05);
    CascadeConfig det;
    det.rounds = 6;
    det.alpha = 0.6;
    CascadeConfig band = det;
    band.outage = {OutageKind::Banded, EpsilonSchedule::constant(0.0)};
    CascadeRun run;
    run.seed = rng();
    run.sim = k;
    const auto a = run_cascade(g, det, run), b = run_cascade(g, band, run);
    same += same_trace(a, b);
    for (const auto& s : a.outage_sets) cascades += !s.empty();
  }
  std::ostringstream d;
  d << same << "/50 identical, " << cascades << " rounds with outages";
  return {same == 50, d.str()};
}

Outcome c4_affine() {
  const double f = affine_factor({1.0, 1.0, 0.005}, 40.96);
  std::ostringstream d;
  d.precision(17);
  d << "factor " << f;
  return {std::abs(f - 0.8002) <= kAnchor, d.str()};
}

Outcome c5_gridsearch() {
  // kappa-tilde from the deterministic run of the one-line fixture.
  Scenario sc{support::single_line(3.0, 1.0), {0.0}, horizon(2)};
  sc.cascade.alpha = 0.5;
  const auto r = grid_search(sc, Objective{});
  double err = 0.0;
  int checked = 0;
  for (int i : {0, 50, 100}) {
    const auto& c = r.candidates.at(i);
    const auto s = make_gridsearch_schedule(c.sbar, 0.0, 2);
    err = std::max(err, std::abs(affine_factor(*s.lookup(1, 1, -1), r.kappa1) - (0.9 - 0.008 * i)));
    ++checked;
  }
  std::ostringstream d;
  d << "kappa " << r.kappa1 << ", max error " << err;
  return {checked == 3 && err <= kAnchor, d.str()};
}

Outcome c6_terminate() {
  const auto g = support::single_line(1.0, 1.0);
  std::vector<double> f{1.7232}, dem{0.0, 54.90}, sup{54.90, 0.0};
  terminate_round(g, islands(g), f, dem, sup);
  std::ostringstream d;
  d << "island yield " << dem[1];
  return {std::abs(dem[1] - 31.86) <= kTerminate, d.str()};
}

struct DpInstance {
  Grid grid;
  int R;
};

std::vector<DpInstance> dp_instances() {
  std::mt19937_64 rng(1007);
  std::vector<DpInstance> out;
  for (int k = 0; k < 100; ++k) {
    const int n = 3 + k % 4;
    const int m = std::min(8, std::min(n * (n - 1) / 2, n + static_cast<int>(rng() % 4)));
    out.push_back({limited(rng, n, m, 0.3, 1.2, 0.1), 1 + k % 3});
  }
  return out;
}

Outcome c7_dp_oracle(const std::vector<DpInstance>& inst) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1077);
  double worst = 0.0;
  bool lemma = true;
  long samples = 0;
  for (const auto& [g, R] : inst) {
    ScalingDP dp(g);
    const auto th = dp.theta(R);
    if (R == 1 && th.piece_count() > 2) lemma = false;
    double top = 1.0;
    for (double b : th.breakpoints()) top = std::max(top, b);
    std::uniform_real_distribution<double> pick(0.0, 1.5 * top);
    for (int i = 0; i < 100; ++i) {
      const double t = pick(rng);
      if (t <= 0.0) continue;
      const auto gt = g.with_injections(times(g.injections(), t));
      const auto oracle = support::lambda_oracle(gt, R);
      LambdaSchedule lambda;
      for (const auto& c : oracle.schedule) lambda.set(c.round, c.buses, c.lambda);
      CascadeConfig cfg;
      cfg.rounds = R;
      CascadeRun run;
      run.control = &lambda;
      const double replayed = run_cascade(gt, cfg, run).terminal_demand;
      worst = std::max(worst, std::abs(th(t) - replayed) / std::max(1.0, std::abs(replayed)));
      ++samples;
    }
  }
  const double wall = seconds(t0);
  std::ostringstream d;
  d << samples << " samples, max rel diff " << worst << ", R=1 pieces "
    << (lemma ? "ok" : "exceed 2") << ", " << wall << " s";
  return {worst <= kDpOracle && lemma && wall < 60.0, d.str()};
}

Outcome c8_dp_shape(const std::vector<DpInstance>& inst) {
  int monotone = 0, continuous = 0;
  double jump = 0.0;
  for (const auto& [g, R] : inst) {
    ScalingDP dp(g);
    const auto th = dp.theta(R);
    monotone += th.nondecreasing();
    continuous += th.continuous();
    jump = std::max(jump, th.max_jump());
  }
  std::ostringstream d;
  d << "nondecreasing " << monotone << "/" << inst.size() << ", continuous " << continuous
    << "/" << inst.size() << ", largest jump " << jump;
  const int total = static_cast<int>(inst.size());
  return {monotone == total && continuous == total, d.str()};
}

Outcome c9_mip() {
  std::mt19937_64 rng(1009);
  int dominated = 0, proportional = 0, equal = 0, parsed = 0;
  for (int k = 0; k < 50; ++k) {
    const int n = 2 + k % 3;
    const int m = std::min(5, std::max(n - 1, n * (n - 1) / 2));
    const auto g = limited(rng, n, m, 0.4, 1.3, 0.2);
    const int R = 1 + k % 2;
    const auto e = verify_by_enumeration(g, R);
    ScalingDP dp(g);
    LambdaSchedule lambda;
    const double v = dp.optimal_schedule(R, 1.0, lambda);
    dominated += e.objective >= v - kMip * std::max(1.0, v);
    if (e.proportional) {
      ++proportional;
      equal += std::abs(e.objective - v) <= kMip * std::max(1.0, v);
    }
    std::ostringstream text;
    write_lp(build_mip(g, R), text);
    support::ParsedLp lp;
    std::string err;
    parsed += support::parse_lp(text.str(), lp, err) &&
              lp.constraints.size() == build_mip(g, R).constraints().size();
  }
  std::ostringstream d;
  d << "dominates " << dominated << "/50, equal " << equal << "/" << proportional
    << " proportional, reparsed " << parsed << "/50";
  return {dominated == 50 && equal == proportional && parsed == 50, d.str()};
}

Outcome c10_gradient() {
  Scenario sc{support::single_line(3.0, 1.0), {0.0}, horizon(2)};
  sc.cascade.alpha = 0.5;
  auto at = [&](double c, double s) {
    return ControlSchedule::make_segmented(demand_segments(sc.grid, 1), {{{c, 1.0, s}}});
  };
  Scenario smooth = sc;
  smooth.cascade.outage = {OutageKind::Smoothed, EpsilonSchedule::constant(0.1)};
  const auto g = sample_path_gradient(smooth, at(1.0, 1.8), 5, 0);
  const AffineControl ctl(expand(at(1.0, 1.8), sc.grid));
  const auto base = run_cascade(smooth.grid, smooth.cascade, {5, 0, &ctl, smooth.initial_flows, nullptr});
  auto frozen = [&](double c, double s) {
    const AffineControl k(expand(at(c, s), sc.grid));
    return run_cascade(smooth.grid, smooth.cascade, {0, 0, &k, smooth.initial_flows, &base.outage_sets})
        .terminal_yield;
  };
  const double h = 1e-6;
  const double gc = (frozen(1 + h, 1.8) - frozen(1 - h, 1.8)) / (2 * h);
  const double gs = (frozen(1, 1.8 + h) - frozen(1, 1.8 - h)) / (2 * h);
  const double gerr = std::max(std::abs(g.values[0] - gc), std::abs(g.values[1] - gs));

  // Scan oracle over s with c = 1: factor 1 - 0.5 s.
  double scan = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double f = std::clamp(1.0 - 0.5 * (2.0 * i / 9999.0), 0.0, 1.0);
    const double y = 1.5 * f > 1.0 ? 0.0 : 100.0 * f / std::max(1.0, 3.0 * f);
    scan = std::max(scan, y);
  }
  const auto r = first_order_search(sc, at(1.0, 1.8), Objective{});
  std::ostringstream d;
  d << "gradient error " << gerr << ", search " << r.best_objective << " vs scan " << scan;
  return {gerr <= kGradient && std::abs(r.best_objective - scan) <= kSearch, d.str()};
}

Outcome c11_stochastic() {
  const auto line = support::single_line(1.0, 1.0);
  OutageRule rule{OutageKind::Banded, EpsilonSchedule::constant(0.1)};
  MemoryState mem(MemoryVariant::Ewma, {1.0}, std::vector<double>{0.95});
  const std::vector<char> active{1};
  int hits = 0;
  for (int s = 0; s < 10000; ++s) hits += !decide_outages(rule, mem, line, active, 1, 2024, s).empty();
  const double freq = hits / 10000.0;

  std::mt19937_64 rng(1011);
  Scenario sc{limited(rng, 12, 20, 0.5, 1.2, 0.05), {}, horizon(5)};
  sc.cascade.outage = {OutageKind::Banded, EpsilonSchedule::constant(0.0)};
  const auto sched = make_gridsearch_schedule(0.05, 0.02, 5);
  const double det = evaluate(sc, sched, Objective{});
  const double mean = evaluate(sc, sched, {ObjectiveKind::Mean, 50, 0.0, 77});
  std::ostringstream d;
  d << "band frequency " << freq << ", mean " << mean << " vs deterministic " << det;
  return {freq >= 0.48 && freq <= 0.52 && mean == det, d.str()};
}

Scenario synthetic_scenario(int buses, int lines, int generators, int loads, int K) {
  SyntheticSpec spec;
  spec.buses = buses;
  spec.lines = lines;
  spec.generators = generators;
  spec.loads = loads;
  const auto g = make_synthetic_grid(spec);
  const auto f0 = solve_grid(g, g.injections()).flows;
  const auto c = generate_contingency(g, f0, {K, 0.5, 3});
  Scenario s;
  s.grid = apply_contingency(g, c.line_ids);
  s.initial_flows = restrict_to_lines(g, s.grid, f0);
  s.cascade.rounds = 8;
  s.cascade.alpha = 0.8;
  s.cascade.outage = {OutageKind::Banded, EpsilonSchedule::constant(0.05)};
  return s;
}

std::string report_text(const Scenario& sc, const ControlSchedule& sched, int workers) {
  const Objective o{ObjectiveKind::Mean, 100, 0.0, 31};
  const double det = evaluate(sc, sched, Objective{}, workers);
  const auto s = sample_yields(sc, sched, o, workers);
  const auto r = make_report(det, s.yields);
  std::ostringstream out;
  write_report(r, out);
  write_histogram(r, out);
  return out.str();
}

Outcome c12_parallel() {
  const auto sc = synthetic_scenario(600, 900, 80, 240, 15);
  const auto sched = make_gridsearch_schedule(0.05, 0.0, 8);
  const auto one = report_text(sc, sched, 1);
  int same = 0;
  for (int w : {4, 8}) same += report_text(sc, sched, w) == one;
  std::ostringstream d;
  d << "workers 4 and 8 match workers 1: " << same << "/2";
  return {same == 2, d.str()};
}

Outcome c13_scale() {
  auto t0 = Clock::now();
  const auto sc = synthetic_scenario(15000, 23000, 2000, 6000, 40);
  const double build = seconds(t0);
  t0 = Clock::now();
  CascadeRun run{1, 0, nullptr, sc.initial_flows, nullptr};
  const auto trace = run_cascade(sc.grid, sc.cascade, run);
  const double one = seconds(t0);
  t0 = Clock::now();
  const auto s = sample_yields(sc, ControlSchedule::none(), {ObjectiveKind::Mean, 100, 0.0, 5}, 8);
  const double batch = seconds(t0);
  std::ostringstream d;
  d << "build " << build << " s, one simulation " << one << " s (yield " << trace.terminal_yield
    << "), 100 samples on 8 workers " << batch << " s";
  return {one <= 1.0 && batch <= 120.0 && s.yields.size() == 100, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected, only;
  auto parse_list = [](const char* text, std::set<int>& out) {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.insert(std::stoi(item));
  };
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--expect-fail") && i + 1 < argc) parse_list(argv[++i], expected);
    else if (!std::strcmp(argv[i], "--only") && i + 1 < argc) parse_list(argv[++i], only);
    else {
      std::cerr << "usage: acceptance [--expect-fail N,...] [--only N,...]\n";
      return 1;
    }
  }

  std::vector<DpInstance> dp;
  auto dp_set = [&]() -> const std::vector<DpInstance>& {
    if (dp.empty()) dp = dp_instances();
    return dp;
  };
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"power flow residuals, permutation and scaling", c1_powerflow},
      {"triangle fixture flows", c2_triangle},
      {"banded rule with zero band equals deterministic", c3_collapse},
      {"affine law anchor 0.8002", c4_affine},
      {"grid-search factors 0.9 - 0.008 i", c5_gridsearch},
      {"termination anchor 31.86", c6_terminate},
      {"scaling DP equals replayed brute force", [&] { return c7_dp_oracle(dp_set()); }},
      {"scaling DP value nondecreasing and continuous", [&] { return c8_dp_shape(dp_set()); }},
      {"enumerated MIP optimum vs scaling DP, LP round trip", c9_mip},
      {"sample-path gradient and first-order search", c10_gradient},
      {"banded coin frequency, zero-band mean", c11_stochastic},
      {"parallel evaluate is byte-identical", c12_parallel},
      {"synthetic 15k-bus timing (soft)", c13_scale},
  };

  std::set<int> failed;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) failed.insert(id);
    std::printf("%s %2d  %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::set<int> want;
  for (int id : expected)
    if (only.empty() || only.count(id)) want.insert(id);
  if (failed != want) {
    std::printf("failures differ from the expected set\n");
    return 1;
  }
  return 0;
}
