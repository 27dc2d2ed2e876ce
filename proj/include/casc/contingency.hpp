#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "casc/grid.hpp"

namespace casc {

enum class TreeRule { MaxFlow, Bfs };

struct ContingencySpec {
  int K = 1;
  double pi = 0.5;
  std::uint64_t seed = 0;
  TreeRule tree = TreeRule::MaxFlow;
};

struct ContingencyResult {
  std::vector<int> line_ids;       // selected lines, in selection order
  std::vector<int> tree_line_ids;  // spanning tree used
  int passes = 0;                  // sweeps over the sorted line list
};

/// Spanning tree of a connected grid. MaxFlow: maximum-|f| tree (Kruskal,
/// ties by line id). Bfs: breadth-first from the lowest bus, incident lines in
/// id order. Returns line indices.
std::vector<int> spanning_tree(const Grid& grid, std::span<const double> f_hat, TreeRule rule);

/// Picks K non-tree lines: lines sorted by |f_hat| descending (ties by id),
/// repeated sweeps admit each unselected non-tree line with probability pi
/// until K are chosen.
ContingencyResult generate_contingency(const Grid& grid, std::span<const double> f_hat,
                                       const ContingencySpec& spec);

/// Grid without the given lines (by id). Throws CaseError on unknown ids.
Grid apply_contingency(const Grid& grid, std::span<const int> line_ids);

/// Keeps the entries of `values` (one per line of `grid`) for lines that
/// survive in `reduced`.
std::vector<double> restrict_to_lines(const Grid& grid, const Grid& reduced,
                                      std::span<const double> values);

}  // namespace casc
