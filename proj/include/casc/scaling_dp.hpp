#pragma once

#include <map>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "casc/cascade.hpp"
#include "casc/grid.hpp"
#include "casc/powerflow.hpp"
#include "casc/pwl.hpp"

namespace casc {

struct CriticalPoints {
  std::vector<double> gammas;            // ascending, distinct
  std::vector<std::vector<int>> lines;   // line indices meeting their limit at gammas[i]
};

/// gamma = u_j/|f_j| for every island line with nonzero flow under `beta`,
/// merged when equal within 1e-12 relative.
CriticalPoints critical_points(const Grid& grid, const Island& island,
                               std::span<const double> beta);

// Optimal componentwise scaling under the deterministic memory-free rule.
// Value functions are memoized per (rounds, component, injections), since the
// injections a component inherits depend on how it was split off.
class ScalingDP {
 public:
  static constexpr int kMaxRounds = 16;

  explicit ScalingDP(const Grid& grid);
  ~ScalingDP();

  /// Final served demand as a function of the injection scale t.
  PiecewiseLinear theta(const Island& island, std::span<const double> beta, int R);
  /// Sum over the islands of the grid at its own injections (rebalanced).
  PiecewiseLinear theta(int R);

  /// Optimal multipliers at scale t, keyed by (round, island buses), and the
  /// value they achieve.
  double optimal_schedule(const Island& island, std::span<const double> beta, int R, double t,
                          LambdaSchedule& out);
  double optimal_schedule(int R, double t, LambdaSchedule& out);

  std::size_t memo_size() const;

 private:
  struct Node;
  struct Component {
    Island island;
    std::vector<double> beta;  // full length, zero outside the component
  };

  Node& node(const Island& island, std::span<const double> beta, int R);
  void build(Node& n);
  std::vector<Component> split(const Node& n, std::size_t level);
  double decide(Node& n, double t, int round, LambdaSchedule& out);
  std::vector<Component> grid_components();

  const Grid* grid_;
  FlowSolver solver_;
  std::vector<double> flows_, phases_;
  std::map<std::vector<std::uint64_t>, std::unique_ptr<Node>> memo_;
};

/// One-shot wrappers.
PiecewiseLinear theta(const Grid& grid, const Island& island, std::span<const double> beta,
                      int R);
std::pair<LambdaSchedule, double> optimal_schedule(const Grid& grid, const Island& island,
                                                   std::span<const double> beta, int R,
                                                   double t);

}  // namespace casc
