#include "casc/contingency.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <string>

#include "casc/errors.hpp"
#include "casc/rng.hpp"

namespace casc {
namespace {

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

// Line indices ordered by |f| descending; the grid stores lines by id, so a
// stable sort breaks ties by id.
std::vector<int> by_flow(const Grid& grid, std::span<const double> f) {
  std::vector<int> order(grid.line_count());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return std::abs(f[a]) > std::abs(f[b]); });
  return order;
}

}  // namespace

std::vector<int> spanning_tree(const Grid& grid, std::span<const double> f_hat, TreeRule rule) {
  if (static_cast<int>(f_hat.size()) != grid.line_count())
    throw ConfigError("spanning_tree: flow vector size mismatch");
  std::vector<int> tree;
  if (rule == TreeRule::MaxFlow) {
    DisjointSets sets(grid.bus_count());
    for (int j : by_flow(grid, f_hat))
      if (sets.unite(grid.tail(j), grid.head(j))) tree.push_back(j);
  } else {
    std::vector<char> seen(grid.bus_count(), 0);
    std::queue<int> queue;
    if (grid.bus_count() > 0) {
      queue.push(0);
      seen[0] = 1;
    }
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop();
      auto inc = grid.incident(v);
      std::vector<int> lines(inc.begin(), inc.end());
      std::sort(lines.begin(), lines.end());
      for (int j : lines) {
        const int w = grid.tail(j) == v ? grid.head(j) : grid.tail(j);
        if (!seen[w]) {
          seen[w] = 1;
          tree.push_back(j);
          queue.push(w);
        }
      }
    }
  }
  if (static_cast<int>(tree.size()) != grid.bus_count() - 1)
    throw InfeasibleError("contingency: grid is not connected");
  std::sort(tree.begin(), tree.end());
  return tree;
}

ContingencyResult generate_contingency(const Grid& grid, std::span<const double> f_hat,
                                       const ContingencySpec& spec) {
  if (spec.K < 1) throw ConfigError("contingency: K must be >= 1");
  if (!(spec.pi > 0.0 && spec.pi < 1.0)) throw ConfigError("contingency: pi must lie in (0,1)");
  const auto tree = spanning_tree(grid, f_hat, spec.tree);
  const int available = grid.line_count() - static_cast<int>(tree.size());
  if (spec.K > available)
    throw InfeasibleError("contingency infeasible: K=" + std::to_string(spec.K) + " but only " +
                          std::to_string(available) + " non-tree lines");

  std::vector<char> in_tree(grid.line_count(), 0), chosen(grid.line_count(), 0);
  for (int j : tree) in_tree[j] = 1;
  const auto order = by_flow(grid, f_hat);

  ContingencyResult result;
  for (int j : tree) result.tree_line_ids.push_back(grid.lines()[j].id);
  while (static_cast<int>(result.line_ids.size()) < spec.K) {
    ++result.passes;
    for (int j : order) {
      if (in_tree[j] || chosen[j]) continue;
      const int id = grid.lines()[j].id;
      if (coin(spec.seed, static_cast<std::uint64_t>(result.passes), 0, id) < spec.pi) {
        chosen[j] = 1;
        result.line_ids.push_back(id);
        if (static_cast<int>(result.line_ids.size()) == spec.K) break;
      }
    }
  }
  return result;
}

Grid apply_contingency(const Grid& grid, std::span<const int> line_ids) {
  std::set<int> remove;
  for (int id : line_ids) {
    grid.line_index(id);
    remove.insert(id);
  }
  if (remove.empty()) return grid;
  std::vector<Line> kept;
  for (const auto& l : grid.lines())
    if (!remove.count(l.id)) kept.push_back(l);
  return grid.with_lines(std::move(kept));
}

std::vector<double> restrict_to_lines(const Grid& grid, const Grid& reduced,
                                      std::span<const double> values) {
  std::vector<double> out;
  out.reserve(reduced.line_count());
  for (const auto& l : reduced.lines()) out.push_back(values[grid.line_index(l.id)]);
  return out;
}

}  // namespace casc
