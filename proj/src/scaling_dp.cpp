#include "casc/scaling_dp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>

#include "casc/errors.hpp"

namespace casc {
namespace {

constexpr double kGammaMerge = 1e-12;
constexpr double kZeroFlow = 1e-13;

}  // namespace

struct ScalingDP::Node {
  Island island;
  std::vector<double> beta;
  int R = 1;
  double demand = 0.0;
  bool built = false;
  CriticalPoints cp;
  std::vector<std::vector<Node*>> children;  // [level]; level 0 unused
  std::vector<PiecewiseLinear> S;            // [level]; level 0 unused
  PiecewiseLinear theta;
};

CriticalPoints critical_points(const Grid& grid, const Island& island,
                               std::span<const double> beta) {
  std::vector<double> flows(grid.line_count(), 0.0), phases(grid.bus_count(), 0.0);
  FlowSolver solver(grid);
  solver.solve_island(island, 0, beta, flows, phases);
  double scale = 0.0;
  for (int v : island.buses) scale += std::abs(beta[v]);

  std::vector<std::pair<double, int>> g;
  for (int j : island.lines)
    if (std::abs(flows[j]) > kZeroFlow * scale)
      g.emplace_back(grid.lines()[j].flow_limit / std::abs(flows[j]), j);
  std::sort(g.begin(), g.end());

  CriticalPoints cp;
  for (const auto& [gamma, j] : g) {
    if (cp.gammas.empty() || gamma - cp.gammas.back() > kGammaMerge * cp.gammas.back()) {
      cp.gammas.push_back(gamma);
      cp.lines.emplace_back();
    }
    cp.lines.back().push_back(j);
  }
  for (auto& l : cp.lines) std::sort(l.begin(), l.end());
  return cp;
}

ScalingDP::ScalingDP(const Grid& grid)
    : grid_(&grid), solver_(grid), flows_(grid.line_count(), 0.0),
      phases_(grid.bus_count(), 0.0) {}

ScalingDP::~ScalingDP() = default;

std::size_t ScalingDP::memo_size() const { return memo_.size(); }

ScalingDP::Node& ScalingDP::node(const Island& island, std::span<const double> beta, int R) {
  if (R < 1 || R > kMaxRounds)
    throw ConfigError("scaling DP: rounds must lie in 1.." + std::to_string(kMaxRounds));
  std::vector<std::uint64_t> key;
  key.reserve(3 + 2 * island.buses.size() + island.lines.size());
  key.push_back(static_cast<std::uint64_t>(R));
  key.push_back(island.buses.size());
  for (int v : island.buses) key.push_back(static_cast<std::uint64_t>(v));
  key.push_back(island.lines.size());
  for (int j : island.lines) key.push_back(static_cast<std::uint64_t>(j));
  for (int v : island.buses) key.push_back(std::bit_cast<std::uint64_t>(beta[v] + 0.0));

  auto& slot = memo_[key];
  if (!slot) {
    slot = std::make_unique<Node>();
    slot->island = island;
    slot->beta.assign(beta.begin(), beta.end());
    slot->R = R;
  }
  if (!slot->built) build(*slot);
  return *slot;
}

std::vector<ScalingDP::Component> ScalingDP::split(const Node& n, std::size_t level) {
  const auto& buses = n.island.buses;
  std::vector<char> removed(grid_->line_count(), 0);
  for (std::size_t h = 0; h < level; ++h)
    for (int j : n.cp.lines[h]) removed[j] = 1;

  std::vector<int> local(grid_->bus_count(), -1);
  for (std::size_t a = 0; a < buses.size(); ++a) local[buses[a]] = static_cast<int>(a);
  std::vector<int> parent(buses.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int j : n.island.lines) {
    if (removed[j]) continue;
    const int a = find(local[grid_->tail(j)]), b = find(local[grid_->head(j)]);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }

  std::vector<int> comp_of_root(buses.size(), -1);
  std::vector<Component> comps;
  for (std::size_t a = 0; a < buses.size(); ++a) {
    const int root = find(static_cast<int>(a));
    if (comp_of_root[root] < 0) {
      comp_of_root[root] = static_cast<int>(comps.size());
      comps.emplace_back();
    }
    comps[comp_of_root[root]].island.buses.push_back(buses[a]);
  }
  for (int j : n.island.lines)
    if (!removed[j]) comps[comp_of_root[find(local[grid_->tail(j)])]].island.lines.push_back(j);

  std::vector<Component> out;
  std::vector<double> demand(grid_->bus_count(), 0.0), supply(grid_->bus_count(), 0.0);
  for (auto& c : comps) {
    for (int v : c.island.buses) {
      demand[v] = std::max(0.0, -n.beta[v]);
      supply[v] = std::max(0.0, n.beta[v]);
    }
    rebalance_island(c.island, demand, supply);
    c.beta.assign(grid_->bus_count(), 0.0);
    double D = 0.0;
    for (int v : c.island.buses) {
      c.beta[v] = supply[v] - demand[v];
      c.island.supply += supply[v];
      c.island.demand += demand[v];
      D += demand[v];
    }
    if (D > 0.0 && !c.island.lines.empty()) out.push_back(std::move(c));
  }
  return out;
}

void ScalingDP::build(Node& n) {
  n.built = true;
  for (int v : n.island.buses) n.demand += std::max(0.0, -n.beta[v]);
  const double D = n.demand;
  if (D <= 0.0 || n.island.lines.empty()) {
    n.theta = PiecewiseLinear::constant(0.0);
    return;
  }
  n.cp = critical_points(*grid_, n.island, n.beta);
  const auto& gamma = n.cp.gammas;
  const std::size_t p = gamma.size();
  if (p == 0) {
    n.theta = PiecewiseLinear::linear(D);
    return;
  }
  if (n.R == 1) {
    n.theta = PiecewiseLinear({{0.0, D, 0.0}, {gamma[0], 0.0, gamma[0] * D}});
    return;
  }

  n.children.resize(p + 1);
  n.S.resize(p + 1);
  std::vector<PiecewiseLinear::Piece> pieces{{0.0, D, 0.0}};
  double C = gamma[0] * D;
  for (std::size_t q = 1; q <= p; ++q) {
    PiecewiseLinear S = PiecewiseLinear::constant(0.0);
    for (auto& c : split(n, q)) {
      Node& child = node(c.island, c.beta, n.R - 1);
      n.children[q].push_back(&child);
      S = sum(S, child.theta);
    }
    const double hi = q < p ? gamma[q] : std::numeric_limits<double>::infinity();
    const auto f = max(PiecewiseLinear::constant(C), S);
    for (const auto& piece : f.window(gamma[q - 1], hi)) pieces.push_back(piece);
    if (q < p) C = std::max(C, S(gamma[q]));
    n.S[q] = std::move(S);
  }
  n.theta = PiecewiseLinear(std::move(pieces));
}

double ScalingDP::decide(Node& n, double t, int round, LambdaSchedule& out) {
  if (n.demand <= 0.0 || n.island.lines.empty()) return 0.0;
  const auto& gamma = n.cp.gammas;
  if (n.R == 1) return n.theta(t);
  if (gamma.empty() || t <= gamma[0]) return t * n.demand;

  const std::size_t q =
      static_cast<std::size_t>(std::lower_bound(gamma.begin(), gamma.end(), t) - gamma.begin());
  double best = n.S[q](t);
  std::size_t pick = 0;  // 0: lambda = 1, else lambda = gamma[pick-1]/t
  for (std::size_t i = 1; i <= q; ++i) {
    const double v = i == 1 ? gamma[0] * n.demand : n.S[i - 1](gamma[i - 1]);
    if (v > best) {
      best = v;
      pick = i;
    }
  }

  double value = 0.0;
  if (pick == 0) {
    for (Node* c : n.children[q]) value += decide(*c, t, round + 1, out);
    return value;
  }
  const double tau = gamma[pick - 1];
  out.set(round, n.island.buses, tau / t);
  if (pick == 1) return tau * n.demand;
  for (Node* c : n.children[pick - 1]) value += decide(*c, tau, round + 1, out);
  return value;
}

PiecewiseLinear ScalingDP::theta(const Island& island, std::span<const double> beta, int R) {
  return node(island, beta, R).theta;
}

double ScalingDP::optimal_schedule(const Island& island, std::span<const double> beta, int R,
                                   double t, LambdaSchedule& out) {
  if (!(t > 0.0)) throw ConfigError("scaling DP: t must be > 0");
  return decide(node(island, beta, R), t, 1, out);
}

std::vector<ScalingDP::Component> ScalingDP::grid_components() {
  const auto beta = grid_->injections();
  auto part = islands(*grid_);
  std::vector<double> demand(grid_->bus_count()), supply(grid_->bus_count());
  for (int v = 0; v < grid_->bus_count(); ++v) {
    demand[v] = std::max(0.0, -beta[v]);
    supply[v] = std::max(0.0, beta[v]);
  }
  std::vector<Component> out;
  for (auto& island : part.islands) {
    rebalance_island(island, demand, supply);
    Component c{island, std::vector<double>(grid_->bus_count(), 0.0)};
    for (int v : island.buses) c.beta[v] = supply[v] - demand[v];
    out.push_back(std::move(c));
  }
  return out;
}

PiecewiseLinear ScalingDP::theta(int R) {
  PiecewiseLinear total = PiecewiseLinear::constant(0.0);
  for (const auto& c : grid_components()) total = sum(total, theta(c.island, c.beta, R));
  return total;
}

double ScalingDP::optimal_schedule(int R, double t, LambdaSchedule& out) {
  double value = 0.0;
  for (const auto& c : grid_components()) value += optimal_schedule(c.island, c.beta, R, t, out);
  return value;
}

PiecewiseLinear theta(const Grid& grid, const Island& island, std::span<const double> beta,
                      int R) {
  ScalingDP dp(grid);
  return dp.theta(island, beta, R);
}

std::pair<LambdaSchedule, double> optimal_schedule(const Grid& grid, const Island& island,
                                                   std::span<const double> beta, int R,
                                                   double t) {
  ScalingDP dp(grid);
  LambdaSchedule schedule;
  const double value = dp.optimal_schedule(island, beta, R, t, schedule);
  return {std::move(schedule), value};
}

}  // namespace casc
