#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "casc/control.hpp"
#include "casc/grid.hpp"

namespace casc {

// Per-round noise level epsilon_r used by the banded and smoothed rules.
struct EpsilonSchedule {
  enum class Kind { Constant, Table, Step, Linear };
  Kind kind = Kind::Constant;
  double e0 = 0.0;
  double a = 0.0;              // Step increment per 10 rounds, Linear slope
  std::vector<double> table;   // Table: epsilon for round r at table[r-1]

  double at(int round) const;
  bool is_zero() const;

  static EpsilonSchedule constant(double e) { return {Kind::Constant, e, 0.0, {}}; }
  static EpsilonSchedule step(double e0, double a) { return {Kind::Step, e0, a, {}}; }
  static EpsilonSchedule linear(double e0, double b) { return {Kind::Linear, e0, b, {}}; }
};

enum class OutageKind { Deterministic, Banded, Smoothed };

struct OutageRule {
  OutageKind kind = OutageKind::Deterministic;
  EpsilonSchedule epsilon;
  double smoothing_m = 50.0;
  bool strict = true;  // deterministic rule: trip on load > limit, else load >= limit

  /// Probability that a line with memory-weighted load `load` and limit
  /// `limit` trips in `round`.
  double probability(double load, double limit, int round) const;
  void validate(int rounds) const;
};

enum class MemoryVariant { Ewma, TwoPoint };

struct MemoryState {
  MemoryVariant variant = MemoryVariant::Ewma;
  std::vector<double> alpha;
  std::vector<double> tilde;     // f~ per line, >= 0
  std::vector<double> prev_abs;  // |f| of the previous update, for TwoPoint

  MemoryState() = default;
  MemoryState(MemoryVariant v, std::vector<double> alpha, std::span<const double> initial_abs);

  /// Value the memory would take if updated with `abs_flow` on line j.
  double peek(int j, double abs_flow) const {
    const double past = variant == MemoryVariant::Ewma ? tilde[j] : prev_abs[j];
    return alpha[j] * abs_flow + (1.0 - alpha[j]) * past;
  }
};

/// Updates lines with `active[j] != 0` (all lines when `active` is empty).
void memory_update(MemoryState& state, std::span<const double> abs_flows,
                   std::span<const char> active = {});

/// Outaged line indices for one round. Coins are keyed by
/// (seed, sim, round, line id).
std::vector<int> decide_outages(const OutageRule& rule, const MemoryState& memory,
                                const Grid& grid, std::span<const char> active, int round,
                                std::uint64_t seed, std::uint64_t sim);

/// Proportional rebalance of one island. `demand` and `supply` are per bus,
/// both nonnegative. Supplies are never raised.
void rebalance_island(const Island& island, std::span<double> demand,
                      std::span<double> supply);

/// Round-R termination. Per island, Psi = max{1, max_j |f_j|/u_j} over the
/// island's active lines; demands and supplies are divided by Psi. Returns
/// Psi per island.
std::vector<double> terminate_round(const Grid& grid, const IslandPartition& part,
                                    std::span<const double> flows,
                                    std::span<double> demand, std::span<double> supply);

enum class Observation { MemoryWeighted, Raw, Variability };

// Hook for the control step. Implementations scale demand entries of the
// island's buses in place.
class DemandControl {
 public:
  virtual ~DemandControl() = default;
  virtual void apply(int round, const Island& island, double kappa,
                     std::span<double> demand) const = 0;
};

// Affine control from a materialized table.
class AffineControl : public DemandControl {
 public:
  explicit AffineControl(ControlTable table) : table_(std::move(table)) {}
  void apply(int round, const Island& island, double kappa,
             std::span<double> demand) const override;
  const ControlTable& table() const { return table_; }

 private:
  ControlTable table_;
};

// Componentwise multipliers keyed by (round, ascending bus indices). Islands
// without an entry keep their demand.
class LambdaSchedule : public DemandControl {
 public:
  void set(int round, std::vector<int> buses, double lambda);
  double get(int round, const std::vector<int>& buses) const;
  void apply(int round, const Island& island, double kappa,
             std::span<double> demand) const override;
  const std::map<std::pair<int, std::vector<int>>, double>& entries() const { return lambda_; }

 private:
  std::map<std::pair<int, std::vector<int>>, double> lambda_;
};

struct CascadeConfig {
  int rounds = 1;  // R; rounds 1..R-1 are controlled, R terminates
  OutageRule outage;
  MemoryVariant memory = MemoryVariant::Ewma;
  double alpha = 1.0;
  std::vector<double> alpha_per_line;  // overrides `alpha` when non-empty
  Observation observation = Observation::MemoryWeighted;
};

struct RoundRecord {
  int round = 0;
  double kappa = 0.0;     // max f~/u at decision time (raw |f|/u in round R)
  int outages = 0;
  int islands = 0;
  double yield = 0.0;     // percent of initial demand served after the round
  double observed = 0.0;  // largest control observation over islands
};

struct CascadeTrace {
  std::vector<RoundRecord> rounds;
  std::vector<std::vector<int>> outage_sets;  // line ids per round 1..R-1
  double initial_demand = 0.0;
  double terminal_demand = 0.0;
  double terminal_yield = 0.0;
  double max_terminal_overload = 0.0;
  int balanced_splits = 0;  // new islands with supply == demand before rebalance
  std::vector<double> final_demand;  // per bus
};

struct CascadeRun {
  std::uint64_t seed = 0;
  std::uint64_t sim = 0;
  const DemandControl* control = nullptr;
  // Signed flows before the initiating event, one per line of the grid.
  // Empty: the grid's own base-case flows.
  std::span<const double> initial_flows;
  // Replaces the outage rule with given per-round line-id sets when non-null.
  const std::vector<std::vector<int>>* forced_outages = nullptr;
};

CascadeTrace run_cascade(const Grid& grid, const CascadeConfig& config,
                         const CascadeRun& run = {});

/// CSV `round,kappa,outages,islands,yield` plus `terminal,<yield>`.
void write_trace(const CascadeTrace& trace, std::ostream& out);

}  // namespace casc
