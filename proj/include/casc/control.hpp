#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "casc/grid.hpp"

namespace casc {

/// Affine shedding triple: when the observation kappa exceeds c, demand is
/// multiplied by min{1, [b + s(c - kappa)]^+}.
struct ControlTriple {
  double c = 1.0;
  double b = 1.0;
  double s = 0.0;

  bool operator==(const ControlTriple&) const = default;
};

double affine_factor(const ControlTriple& t, double kappa);
double apply_affine_law(const ControlTriple& t, double kappa, double demand);

enum class ScheduleForm { PerBus, Uniform, Segmented };

/// Affine control for rounds 1..rounds. A triple for (round, bus) is looked
/// up bus entry first, then segment entry, then the round's uniform entry.
struct ControlSchedule {
  int rounds = 0;
  std::vector<std::optional<ControlTriple>> uniform;                 // [round-1]
  std::vector<std::vector<int>> segments;                            // bus ids
  std::vector<std::vector<std::optional<ControlTriple>>> by_segment;  // [round-1][seg]
  std::map<std::pair<int, int>, ControlTriple> by_bus;               // (round, bus id)

  ScheduleForm form() const;
  std::optional<ControlTriple> lookup(int round, int bus_id, int segment) const;

  static ControlSchedule none();
  static ControlSchedule make_uniform(std::vector<ControlTriple> per_round);
  static ControlSchedule make_segmented(std::vector<std::vector<int>> segments,
                                        std::vector<std::vector<ControlTriple>> triples);
};

/// Demand quantiles: demand buses sorted by initial demand (descending, ties
/// by id ascending) and cut into H consecutive groups whose sizes differ by
/// at most one. Returns bus ids.
std::vector<std::vector<int>> demand_segments(const Grid& grid, int H);

/// Uniform (1,1,sbar1) in round 1, (1,1,sbar2) in round 2, neutral after.
/// Covers rounds 1..R-1; requires R >= 2.
ControlSchedule make_gridsearch_schedule(double sbar1, double sbar2, int R);

// Fully materialized per-(round, bus index) table.
class ControlTable {
 public:
  ControlTable() = default;
  ControlTable(int rounds, int buses);

  int rounds() const { return rounds_; }
  int buses() const { return buses_; }
  const ControlTriple& at(int round, int bus) const {
    return triples_[static_cast<std::size_t>(round - 1) * buses_ + bus];
  }
  ControlTriple& at(int round, int bus) {
    return triples_[static_cast<std::size_t>(round - 1) * buses_ + bus];
  }

 private:
  int rounds_ = 0;
  int buses_ = 0;
  std::vector<ControlTriple> triples_;
};

/// Materializes the schedule for every bus of `grid`. Non-demand buses get the
/// neutral triple. Throws ConfigError if a demand bus has no applicable entry.
ControlTable expand(const ControlSchedule& schedule, const Grid& grid);

/// Schedule CSV: `round,scope,c,b,s`, scope one of `*`, `seg:<k>` (1-based),
/// `bus:<id>`. Segment membership is not stored; pass it when reading.
void write_schedule(const ControlSchedule& schedule, std::ostream& out);
void write_schedule(const ControlSchedule& schedule, const std::filesystem::path& path);
ControlSchedule read_schedule(const std::filesystem::path& path,
                              std::vector<std::vector<int>> segments = {});

}  // namespace casc
