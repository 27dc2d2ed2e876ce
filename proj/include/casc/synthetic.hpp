#pragma once

#include <cstdint>

#include "casc/grid.hpp"

namespace casc {

struct SyntheticSpec {
  int buses = 15000;
  int lines = 23000;
  int generators = 2000;
  int loads = 6000;
  int neighbours = 4;  // k-nearest candidates per bus
  std::uint64_t seed = 1;
};

/// Connected random geometric grid in the unit square. Reactances grow with
/// line length; flow limits sit 10-60% above the base-case flows. Balanced.
Grid make_synthetic_grid(const SyntheticSpec& spec);

}  // namespace casc
