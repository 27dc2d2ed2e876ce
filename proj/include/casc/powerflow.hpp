#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "casc/grid.hpp"

namespace casc {

/// Linearized power flow: flows per line (signed w.r.t. line orientation) and
/// phase angles per bus, one reference bus pinned to zero per island.
struct PowerFlowSolution {
  std::vector<double> flows;
  std::vector<double> phases;
};

/// Multiplies every reactance by target_max / max_j x_j. Flows are invariant.
Grid scale_reactances(const Grid& grid, double target_max = 100.0);

/// Solves one island. Lines and buses outside the island are reported as 0.
PowerFlowSolution solve_island(const Grid& grid, const Island& island,
                               std::span<const double> beta);

/// Solves every island of the full grid; throws ImbalanceError naming the
/// first unbalanced island.
PowerFlowSolution solve_grid(const Grid& grid, std::span<const double> beta);

// Reduced weighted-Laplacian solver with a per-island factorization cache.
// Not thread-safe; use one instance per worker.
class FlowSolver {
 public:
  explicit FlowSolver(const Grid& grid);
  ~FlowSolver();
  FlowSolver(FlowSolver&&) noexcept;
  FlowSolver& operator=(FlowSolver&&) noexcept;

  /// Solves all islands of `part` for the injection vector `beta`. `flows`
  /// has one slot per grid line (slots of inactive lines are left untouched)
  /// and `phases` one per bus.
  void solve(const IslandPartition& part, std::span<const double> beta,
             std::span<double> flows, std::span<double> phases);

  /// Solves a single island; `island_id` only labels errors.
  void solve_island(const Island& island, int island_id,
                    std::span<const double> beta, std::span<double> flows,
                    std::span<double> phases);

  std::size_t cached_factorizations() const { return cache_.size(); }
  std::size_t factorizations() const { return factorizations_; }

 private:
  struct Factor;
  Factor& factor_for(const Island& island);

  const Grid* grid_;
  std::vector<double> admittance_;
  std::vector<int> local_;
  std::unordered_map<std::uint64_t, std::unique_ptr<Factor>> cache_;
  std::uint64_t generation_ = 0;
  std::size_t factorizations_ = 0;
};

}  // namespace casc
