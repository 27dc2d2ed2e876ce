#include "casc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <tuple>
#include <utility>

#include "casc/errors.hpp"
#include "casc/powerflow.hpp"

namespace casc {
namespace {

struct Dsu {
  std::vector<int> parent;
  explicit Dsu(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

struct Edge {
  double length;
  int a, b;
  bool operator<(const Edge& o) const {
    return std::tie(length, a, b) < std::tie(o.length, o.a, o.b);
  }
};

}  // namespace

Grid make_synthetic_grid(const SyntheticSpec& spec) {
  const int n = spec.buses;
  if (n < 2 || spec.lines < n - 1 || spec.generators < 1 || spec.loads < 1 ||
      spec.generators + spec.loads > n)
    throw ConfigError("synthetic grid: inconsistent sizes");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = unit(rng);
    y[i] = unit(rng);
  }
  auto dist = [&](int a, int b) { return std::hypot(x[a] - x[b], y[a] - y[b]); };

  // Bucket grid for k-nearest candidates.
  const int cells = std::max(1, static_cast<int>(std::sqrt(n / 2.0)));
  std::vector<std::vector<int>> bucket(static_cast<std::size_t>(cells) * cells);
  auto cell_of = [&](double v) { return std::min(cells - 1, static_cast<int>(v * cells)); };
  for (int i = 0; i < n; ++i) bucket[cell_of(x[i]) * cells + cell_of(y[i])].push_back(i);

  std::vector<Edge> candidates;
  const int k = std::max(1, spec.neighbours);
  std::vector<std::pair<double, int>> near;
  for (int i = 0; i < n; ++i) {
    const int cx = cell_of(x[i]), cy = cell_of(y[i]);
    for (int ring = 1;; ++ring) {
      near.clear();
      for (int gx = std::max(0, cx - ring); gx <= std::min(cells - 1, cx + ring); ++gx)
        for (int gy = std::max(0, cy - ring); gy <= std::min(cells - 1, cy + ring); ++gy)
          for (int j : bucket[gx * cells + gy])
            if (j != i) near.emplace_back(dist(i, j), j);
      if (static_cast<int>(near.size()) >= k || ring >= cells) break;
    }
    const auto take = std::min<std::size_t>(k, near.size());
    std::partial_sort(near.begin(), near.begin() + take, near.end());
    for (std::size_t t = 0; t < take; ++t)
      candidates.push_back({near[t].first, std::min(i, near[t].second), std::max(i, near[t].second)});
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end(),
                               [](const Edge& p, const Edge& q) { return p.a == q.a && p.b == q.b; }),
                   candidates.end());

  Dsu dsu(n);
  std::vector<Edge> chosen;
  std::vector<char> used(candidates.size(), 0);
  for (std::size_t e = 0; e < candidates.size(); ++e)
    if (dsu.unite(candidates[e].a, candidates[e].b)) {
      chosen.push_back(candidates[e]);
      used[e] = 1;
    }
  // Stitch leftover components to the nearest bus outside them.
  for (int i = 0; i < n; i = dsu.find(i) == dsu.find(0) ? i + 1 : i) {
    if (dsu.find(i) == dsu.find(0)) continue;
    int best = -1;
    for (int j = 0; j < n; ++j)
      if (dsu.find(j) != dsu.find(i) && (best < 0 || dist(i, j) < dist(i, best))) best = j;
    dsu.unite(i, best);
    chosen.push_back({dist(i, best), std::min(i, best), std::max(i, best)});
  }
  for (std::size_t e = 0; e < candidates.size() && static_cast<int>(chosen.size()) < spec.lines; ++e)
    if (!used[e]) chosen.push_back(candidates[e]);
  if (static_cast<int>(chosen.size()) < spec.lines)
    throw ConfigError("synthetic grid: not enough candidate lines; raise neighbours");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Bus> buses(n);
  for (int i = 0; i < n; ++i) buses[i] = {i, 0.0, 0.0};
  double demand = 0.0;
  std::uniform_real_distribution<double> load(10.0, 100.0);
  for (int t = 0; t < spec.loads; ++t) {
    const double d = std::round(load(rng) * 100.0) / 100.0;
    buses[order[spec.generators + t]].beta = -d;
    demand += d;
  }
  std::vector<double> w(spec.generators);
  for (double& v : w) v = 0.5 + unit(rng);
  const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
  double assigned = 0.0;
  for (int g = 0; g < spec.generators; ++g) {
    auto& b = buses[order[g]];
    b.beta = g + 1 < spec.generators ? demand * w[g] / wsum : demand - assigned;
    assigned += b.beta;
    b.max_supply = 1.2 * b.beta;
  }

  std::vector<Line> lines;
  lines.reserve(chosen.size());
  for (std::size_t j = 0; j < chosen.size(); ++j)
    lines.push_back({static_cast<int>(j), chosen[j].a, chosen[j].b, 0.01 + chosen[j].length, 1.0});
  Grid grid(buses, lines);

  const auto flows = solve_grid(grid, grid.injections()).flows;
  std::uniform_real_distribution<double> margin(0.1, 0.6);
  for (std::size_t j = 0; j < lines.size(); ++j) {
    const double f = std::abs(flows[j]);
    lines[j].flow_limit = f > 1e-6 ? (1.0 + margin(rng)) * f : 1.0;
  }
  return Grid(std::move(buses), std::move(lines));
}

}  // namespace casc
