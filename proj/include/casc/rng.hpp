#pragma once

#include <cstdint>

namespace casc {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based uniform draw in [0,1). The value depends only on the four
// keys, so outcomes do not depend on evaluation order or thread count.
inline double coin(std::uint64_t seed, std::uint64_t sim, std::uint64_t round,
                   std::uint64_t line_id) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ sim);
  h = splitmix64(h ^ (round << 32 | (line_id & 0xffffffffULL)));
  h = splitmix64(h ^ (line_id >> 32));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace casc
