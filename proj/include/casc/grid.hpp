#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace casc {

/// A bus of the network. `beta` is the net injection in MW: positive for a
/// generator, negative for a load, zero for a pass-through bus.
struct Bus {
  int id = 0;
  double beta = 0.0;
  double max_supply = 0.0;
};

/// A transmission line oriented tail -> head. Orientation only fixes the
/// sign convention of the flow.
struct Line {
  int id = 0;
  int tail = 0;
  int head = 0;
  double reactance = 1.0;
  double flow_limit = 0.0;
};

/// Immutable network. Buses and lines are stored sorted by id; everything
/// else in the library addresses them by position ("index") in that order.
class Grid {
 public:
  Grid() = default;
  /// Validates ids, endpoints and global balance. Throws CaseError.
  Grid(std::vector<Bus> buses, std::vector<Line> lines);

  std::span<const Bus> buses() const { return buses_; }
  std::span<const Line> lines() const { return lines_; }
  int bus_count() const { return static_cast<int>(buses_.size()); }
  int line_count() const { return static_cast<int>(lines_.size()); }

  int tail(int line) const { return tail_[line]; }
  int head(int line) const { return head_[line]; }

  // Bus index -> incident line indices (CSR layout).
  std::span<const int> incident(int bus) const {
    return {adj_lines_.data() + adj_start_[bus],
            adj_lines_.data() + adj_start_[bus + 1]};
  }

  int bus_index(int id) const;   // throws CaseError on unknown id
  int line_index(int id) const;  // throws CaseError on unknown id

  std::vector<double> injections() const;
  std::vector<double> reactances() const;
  std::vector<double> flow_limits() const;
  std::vector<int> generator_buses() const;  // indices with beta > 0
  std::vector<int> demand_buses() const;     // indices with beta < 0
  double total_demand() const;

  Grid with_lines(std::vector<Line> lines) const;
  Grid with_injections(std::span<const double> beta) const;

 private:
  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  std::vector<int> tail_;
  std::vector<int> head_;
  std::vector<int> adj_start_;
  std::vector<int> adj_lines_;
};

struct Island {
  std::vector<int> buses;  // ascending bus indices; buses[0] is the reference
  std::vector<int> lines;  // ascending line indices
  double supply = 0.0;     // sum of positive injections
  double demand = 0.0;     // sum of negated negative injections
};

struct IslandPartition {
  std::vector<int> island_of_bus;
  std::vector<Island> islands;  // ordered by smallest member bus

  int count() const { return static_cast<int>(islands.size()); }
};

/// Connected components of the grid using every line.
IslandPartition islands(const Grid& grid);

/// Connected components restricted to lines with `active[j] != 0`.
/// Supply and demand totals are taken from `beta`.
IslandPartition islands(const Grid& grid, std::span<const char> active,
                        std::span<const double> beta);

/// Reads the two-file CSV case format:
///   buses.csv  `bus_id,beta,max_supply`
///   lines.csv  `line_id,tail,head,reactance,flow_limit`
/// Blank lines and lines starting with `#` are skipped.
Grid load_case(const std::filesystem::path& bus_file,
               const std::filesystem::path& line_file);

/// Writes the same format with shortest round-trip number formatting.
void write_case(const Grid& grid, const std::filesystem::path& bus_file,
                const std::filesystem::path& line_file);

struct RepairOptions {
  double gamma = 0.2;
  double limit_floor = 1e-4;
  double zero_flow = 1e-6;
  double near_limit = 0.999;
  double raise = 1.25;
};

/// Fixes known data defects given the base-case flows `f0`: zero flow limits
/// are reset from the flow, limits at or under the base-case flow are raised,
/// and negative reactances are replaced by their absolute values.
Grid repair_data(const Grid& grid, std::span<const double> f0,
                 const RepairOptions& options = {});

/// Convenience pipeline: absolute reactances, base-case solve, repair_data.
Grid repair_case(const Grid& grid, const RepairOptions& options = {});

std::string format_double(double value);

}  // namespace casc
