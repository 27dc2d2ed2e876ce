#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "casc/cascade.hpp"
#include "casc/control.hpp"
#include "casc/grid.hpp"

namespace casc {

// A cascade instance: the post-contingency grid, the signed flows before the
// initiating event (one per surviving line; empty = the grid's own flows),
// and the cascade rules.
struct Scenario {
  Grid grid;
  std::vector<double> initial_flows;
  CascadeConfig cascade;
};

enum class ObjectiveKind { DeterministicYield, Mean, MeanMinusVariance, Sharpe };

struct Objective {
  ObjectiveKind kind = ObjectiveKind::DeterministicYield;
  int samples = 1;
  double lambda = 0.0;
  std::uint64_t seed = 0;
};

struct SampleSet {
  std::vector<double> yields;
  int balanced_splits = 0;
};

/// Terminal yields of the runs behind an objective: one run under the
/// deterministic rule for DeterministicYield, else `samples` runs with
/// streams (seed, i).
SampleSet sample_yields(const Scenario& scenario, const ControlSchedule& schedule,
                        const Objective& objective, int workers = 1);

/// Mean, mean - lambda*var or mean/var with the population variance.
/// Sharpe with zero variance throws std::domain_error("zero variance").
double objective_value(const Objective& objective, std::span<const double> yields);

double evaluate(const Scenario& scenario, const ControlSchedule& schedule,
                const Objective& objective, int workers = 1);

struct SearchOptions {
  int workers = 1;
  int max_iterations = 25;
  double rel_tol = 1e-4;
  int line_search_steps = 10;  // mu = mu0 * 2^k, k = -6, -5, ...
  double fd_step = 1e-3;
  int max_halvings = 20;
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double step = 0.0;
};

struct Candidate {
  int round = 0;   // grid search: which s-bar is being enumerated
  int stage = 0;   // 1 coarse, 2 refinement
  double sbar = 0.0;
  double objective = 0.0;
};

struct SearchReport {
  ControlSchedule best;
  double best_objective = 0.0;
  int iterations = 0;
  std::vector<IterationRecord> log;
  std::vector<Candidate> candidates;
  long simulations = 0;
  double wall_seconds = 0.0;
  bool subgradient = false;
  double kappa1 = 0.0;
  double kappa2 = 0.0;
};

/// Two-pass uniform search over s-bar for rounds 1 and 2.
SearchReport grid_search(const Scenario& scenario, const Objective& objective,
                         const SearchOptions& options = {});

/// Segmented schedule over `segments` whose entries equal what `base` would
/// give each segment (uniform entries are copied, missing rounds neutral).
ControlSchedule segmentize(const ControlSchedule& base, std::vector<std::vector<int>> segments,
                           int rounds);

/// Search coordinates of a segmented schedule: (c, s) for each round, then
/// each segment. b is not a coordinate.
std::vector<double> segment_coordinates(const ControlSchedule& schedule);
ControlSchedule with_coordinates(const ControlSchedule& schedule, std::span<const double> x);

struct Gradient {
  std::vector<double> values;
  bool subgradient = false;
  long simulations = 0;
};

/// Central differences with step h*max(|x|, 0.01) and common random numbers.
Gradient estimate_gradient_fd(const Scenario& scenario, const ControlSchedule& schedule,
                              const Objective& objective, const SearchOptions& options = {});

/// Steepest ascent on the segment coordinates with a geometric line search.
SearchReport first_order_search(const Scenario& scenario, const ControlSchedule& start,
                                const Objective& objective, const SearchOptions& options = {});

/// Gradient of one sampled cascade's yield with its outage sets held fixed.
/// Requires the smoothed rule. Steps that would change an outage set are
/// halved up to options.max_halvings times; otherwise InfeasibleError names
/// the coordinate.
Gradient sample_path_gradient(const Scenario& scenario, const ControlSchedule& schedule,
                              std::uint64_t seed, std::uint64_t sim = 0,
                              const SearchOptions& options = {});

}  // namespace casc
