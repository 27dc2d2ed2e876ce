#include "casc/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "casc/errors.hpp"
#include "casc/powerflow.hpp"
#include "casc/rng.hpp"

namespace casc {
namespace {

// Loads within this relative distance of the limit count as "at the limit".
// Replays of computed controls put lines exactly at their limit.
constexpr double kLimitTolerance = 1e-10;
constexpr double kBalancedSplit = 1e-9;

}  // namespace

double EpsilonSchedule::at(int round) const {
  switch (kind) {
    case Kind::Constant:
      return e0;
    case Kind::Table:
      if (table.empty()) return 0.0;
      return table[std::min<std::size_t>(round - 1, table.size() - 1)];
    case Kind::Step:
      return e0 + a * std::floor(round / 10.0);
    case Kind::Linear:
      return e0 + a * round;
  }
  return 0.0;
}

bool EpsilonSchedule::is_zero() const {
  switch (kind) {
    case Kind::Table:
      return std::all_of(table.begin(), table.end(), [](double e) { return e == 0.0; });
    default:
      return e0 == 0.0 && a == 0.0;
  }
}

double OutageRule::probability(double load, double limit, int round) const {
  const double ratio = load / limit;
  switch (kind) {
    case OutageKind::Deterministic:
      if (strict) return ratio > 1.0 + kLimitTolerance ? 1.0 : 0.0;
      return ratio >= 1.0 - kLimitTolerance ? 1.0 : 0.0;
    case OutageKind::Banded: {
      if (ratio > 1.0 + kLimitTolerance) return 1.0;
      const double eps = epsilon.at(round);
      return eps > 0.0 && ratio > 1.0 - eps ? 0.5 : 0.0;
    }
    case OutageKind::Smoothed: {
      const double lo = 1.0 - epsilon.at(round);
      if (ratio <= lo) return 0.5 * std::exp(-smoothing_m * (1.0 - ratio / lo));
      if (ratio < 1.0) return 0.5;
      return 0.5 * (2.0 - std::exp(-smoothing_m * (ratio - 1.0)));
    }
  }
  return 0.0;
}

void OutageRule::validate(int rounds) const {
  if (!(smoothing_m > 0.0)) throw ConfigError("smoothing_m must be > 0");
  for (int r = 1; r <= rounds; ++r) {
    const double e = epsilon.at(r);
    if (!(e >= 0.0 && e < 1.0))
      throw ConfigError("epsilon for round " + std::to_string(r) + " is outside [0,1)");
  }
}

MemoryState::MemoryState(MemoryVariant v, std::vector<double> a,
                         std::span<const double> initial_abs)
    : variant(v), alpha(std::move(a)), tilde(initial_abs.begin(), initial_abs.end()),
      prev_abs(initial_abs.begin(), initial_abs.end()) {
  if (alpha.size() != tilde.size())
    throw ConfigError("memory: alpha has " + std::to_string(alpha.size()) +
                      " entries for " + std::to_string(tilde.size()) + " lines");
  for (double x : alpha)
    if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("alpha must lie in [0,1]");
}

void memory_update(MemoryState& state, std::span<const double> abs_flows,
                   std::span<const char> active) {
  const std::size_t m = state.tilde.size();
  for (std::size_t j = 0; j < m; ++j) {
    if (!active.empty() && !active[j]) continue;
    state.tilde[j] = state.peek(static_cast<int>(j), abs_flows[j]);
    state.prev_abs[j] = abs_flows[j];
  }
}

std::vector<int> decide_outages(const OutageRule& rule, const MemoryState& memory,
                                const Grid& grid, std::span<const char> active, int round,
                                std::uint64_t seed, std::uint64_t sim) {
  std::vector<int> out;
  const auto lines = grid.lines();
  for (int j = 0; j < grid.line_count(); ++j) {
    if (!active.empty() && !active[j]) continue;
    const double p = rule.probability(memory.tilde[j], lines[j].flow_limit, round);
    if (p >= 1.0 || (p > 0.0 && coin(seed, sim, round, lines[j].id) < p)) out.push_back(j);
  }
  return out;
}

void rebalance_island(const Island& island, std::span<double> demand,
                      std::span<double> supply) {
  double S = 0.0, D = 0.0;
  for (int v : island.buses) {
    S += supply[v];
    D += demand[v];
  }
  if (S == D) return;
  if (S <= 0.0) {
    for (int v : island.buses) demand[v] = 0.0;
  } else if (D <= 0.0) {
    for (int v : island.buses) supply[v] = 0.0;
  } else if (D > S) {
    const double r = S / D;
    for (int v : island.buses) demand[v] *= r;
  } else {
    const double r = D / S;
    for (int v : island.buses) supply[v] *= r;
  }
}

std::vector<double> terminate_round(const Grid& grid, const IslandPartition& part,
                                    std::span<const double> flows,
                                    std::span<double> demand, std::span<double> supply) {
  std::vector<double> psi(part.count(), 1.0);
  const auto lines = grid.lines();
  for (int i = 0; i < part.count(); ++i) {
    for (int j : part.islands[i].lines)
      psi[i] = std::max(psi[i], std::abs(flows[j]) / lines[j].flow_limit);
    if (psi[i] > 1.0) {
      for (int v : part.islands[i].buses) {
        demand[v] /= psi[i];
        supply[v] /= psi[i];
      }
    }
  }
  return psi;
}

void AffineControl::apply(int round, const Island& island, double kappa,
                          std::span<double> demand) const {
  if (round > table_.rounds()) return;
  for (int v : island.buses)
    if (demand[v] > 0.0) demand[v] = apply_affine_law(table_.at(round, v), kappa, demand[v]);
}

void LambdaSchedule::set(int round, std::vector<int> buses, double lambda) {
  lambda_[{round, std::move(buses)}] = lambda;
}

double LambdaSchedule::get(int round, const std::vector<int>& buses) const {
  auto it = lambda_.find({round, buses});
  return it == lambda_.end() ? 1.0 : it->second;
}

void LambdaSchedule::apply(int round, const Island& island, double,
                           std::span<double> demand) const {
  const double lambda = get(round, island.buses);
  if (lambda == 1.0) return;
  for (int v : island.buses) demand[v] *= lambda;
}

namespace {

class Engine {
 public:
  Engine(const Grid& grid, const CascadeConfig& config, const CascadeRun& run)
      : grid_(grid), config_(config), run_(run), solver_(grid),
        n_(grid.bus_count()), m_(grid.line_count()),
        demand_(n_), supply_(n_), beta_(n_), phases_(n_),
        flows_(m_, 0.0), post_(m_, 0.0), abs_(m_, 0.0), active_(m_, 1) {
    if (config.rounds < 1) throw ConfigError("rounds must be >= 1");
    if (run.forced_outages == nullptr) config.outage.validate(config.rounds);
    const auto buses = grid.buses();
    for (int v = 0; v < n_; ++v) {
      demand_[v] = std::max(0.0, -buses[v].beta);
      supply_[v] = std::max(0.0, buses[v].beta);
    }
    limits_ = grid.flow_limits();
    for (int j = 0; j < m_; ++j)
      if (!(limits_[j] > 0.0))
        throw CaseError("line " + std::to_string(grid.lines()[j].id) +
                        " has a non-positive flow limit; repair the case first");
  }

  CascadeTrace run() {
    trace_.initial_demand = total(demand_);
    partition();
    for (const auto& island : part_.islands) rebalance_island(island, demand_, supply_);

    std::vector<double> initial;
    if (run_.initial_flows.empty()) {
      solve(flows_);
      initial = flows_;
    } else {
      if (static_cast<int>(run_.initial_flows.size()) != m_)
        throw ConfigError("initial flows: expected " + std::to_string(m_) + " entries");
      initial.assign(run_.initial_flows.begin(), run_.initial_flows.end());
    }
    prev_signed_ = initial;
    for (int j = 0; j < m_; ++j) abs_[j] = std::abs(initial[j]);
    std::vector<double> alpha = config_.alpha_per_line;
    if (alpha.empty()) alpha.assign(m_, config_.alpha);
    memory_ = MemoryState(config_.memory, std::move(alpha), abs_);

    for (int r = 1; r < config_.rounds; ++r) controlled_round(r);
    final_round();
    return std::move(trace_);
  }

 private:
  static double total(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }

  double yield() const {
    if (trace_.initial_demand <= 0.0) return 100.0;
    return 100.0 * total(demand_) / trace_.initial_demand;
  }

  void partition() {
    for (int v = 0; v < n_; ++v) beta_[v] = supply_[v] - demand_[v];
    part_ = islands(grid_, active_, beta_);
  }

  void solve(std::vector<double>& out) {
    for (int v = 0; v < n_; ++v) beta_[v] = supply_[v] - demand_[v];
    std::fill(out.begin(), out.end(), 0.0);
    solver_.solve(part_, beta_, out, phases_);
  }

  double observe(const Island& island, int round) const {
    double kappa = 0.0;
    for (int j : island.lines) {
      const double f = flows_[j];
      switch (config_.observation) {
        case Observation::MemoryWeighted:
          kappa = std::max(kappa, memory_.peek(j, std::abs(f)) / limits_[j]);
          break;
        case Observation::Raw:
          kappa = std::max(kappa, std::abs(f) / limits_[j]);
          break;
        case Observation::Variability:
          if (prev_signed_[j] != 0.0)
            kappa = std::max(kappa, std::abs(f - prev_signed_[j]) / std::abs(prev_signed_[j]));
          break;
      }
    }
    (void)round;
    return kappa;
  }

  void controlled_round(int r) {
    RoundRecord rec;
    rec.round = r;
    solve(flows_);

    bool changed = false;
    if (run_.control != nullptr) {
      for (const auto& island : part_.islands) {
        const double kappa = observe(island, r);
        rec.observed = std::max(rec.observed, kappa);
        scratch_.clear();
        for (int v : island.buses) scratch_.push_back(demand_[v]);
        run_.control->apply(r, island, kappa, demand_);
        bool local = false;
        for (std::size_t k = 0; k < island.buses.size(); ++k)
          local |= demand_[island.buses[k]] != scratch_[k];
        if (local) {
          rebalance_island(island, demand_, supply_);
          changed = true;
        }
      }
    } else {
      for (const auto& island : part_.islands)
        rec.observed = std::max(rec.observed, observe(island, r));
    }
    if (changed) solve(post_);
    else post_ = flows_;

    for (int j = 0; j < m_; ++j) abs_[j] = std::abs(post_[j]);
    memory_update(memory_, abs_, active_);
    for (int j = 0; j < m_; ++j)
      if (active_[j]) rec.kappa = std::max(rec.kappa, memory_.tilde[j] / limits_[j]);

    std::vector<int> out;
    if (run_.forced_outages != nullptr) {
      if (static_cast<std::size_t>(r - 1) < run_.forced_outages->size()) {
        for (int id : (*run_.forced_outages)[r - 1]) {
          const int j = grid_.line_index(id);
          if (!active_[j])
            throw ConfigError("forced outage of line " + std::to_string(id) +
                              " in round " + std::to_string(r) + ", already out");
          out.push_back(j);
        }
      }
    } else {
      out = decide_outages(config_.outage, memory_, grid_, active_, r, run_.seed, run_.sim);
    }

    std::vector<int> ids;
    ids.reserve(out.size());
    for (int j : out) {
      active_[j] = 0;
      ids.push_back(grid_.lines()[j].id);
    }
    std::sort(ids.begin(), ids.end());
    trace_.outage_sets.push_back(std::move(ids));
    prev_signed_ = flows_;

    if (!out.empty()) {
      std::vector<int> old_size(n_);
      for (const auto& island : part_.islands)
        for (int v : island.buses) old_size[v] = static_cast<int>(island.buses.size());
      partition();
      for (const auto& island : part_.islands) {
        if (static_cast<int>(island.buses.size()) == old_size[island.buses[0]]) continue;
        const double S = island.supply, D = island.demand;
        if (D > 0.0 && std::abs(S - D) <= kBalancedSplit * std::max(1.0, S + D))
          ++trace_.balanced_splits;
        rebalance_island(island, demand_, supply_);
      }
    }

    rec.outages = static_cast<int>(out.size());
    rec.islands = part_.count();
    rec.yield = yield();
    trace_.rounds.push_back(rec);
  }

  void final_round() {
    RoundRecord rec;
    rec.round = config_.rounds;
    partition();
    solve(flows_);
    for (int j = 0; j < m_; ++j)
      if (active_[j]) rec.kappa = std::max(rec.kappa, std::abs(flows_[j]) / limits_[j]);
    const auto psi = terminate_round(grid_, part_, flows_, demand_, supply_);
    for (int i = 0; i < part_.count(); ++i)
      for (int j : part_.islands[i].lines)
        trace_.max_terminal_overload =
            std::max(trace_.max_terminal_overload, std::abs(flows_[j]) / limits_[j] / psi[i]);
    rec.islands = part_.count();
    rec.yield = yield();
    trace_.rounds.push_back(rec);
    trace_.terminal_demand = total(demand_);
    trace_.terminal_yield = rec.yield;
    trace_.final_demand = demand_;
  }

  const Grid& grid_;
  const CascadeConfig& config_;
  const CascadeRun& run_;
  FlowSolver solver_;
  int n_, m_;
  std::vector<double> demand_, supply_, beta_, phases_;
  std::vector<double> flows_, post_, abs_, limits_, prev_signed_, scratch_;
  std::vector<char> active_;
  IslandPartition part_;
  MemoryState memory_;
  CascadeTrace trace_;
};

}  // namespace

CascadeTrace run_cascade(const Grid& grid, const CascadeConfig& config,
                         const CascadeRun& run) {
  return Engine(grid, config, run).run();
}

void write_trace(const CascadeTrace& trace, std::ostream& out) {
  out << "round,kappa,outages,islands,yield\n";
  for (const auto& r : trace.rounds)
    out << r.round << ',' << format_double(r.kappa) << ',' << r.outages << ','
        << r.islands << ',' << format_double(r.yield) << '\n';
  out << "terminal," << format_double(trace.terminal_yield) << '\n';
}

}  // namespace casc
