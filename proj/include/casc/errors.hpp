#pragma once

#include <stdexcept>
#include <string>

namespace casc {

// Malformed or inconsistent case data (CSV parse errors, dangling ids, ...).
class CaseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An island whose injections do not sum to zero.
class ImbalanceError : public std::runtime_error {
 public:
  ImbalanceError(int island, double mismatch)
      : std::runtime_error("island " + std::to_string(island) +
                           " is unbalanced (mismatch " +
                           std::to_string(mismatch) + ")"),
        island_(island) {}
  int island() const { return island_; }

 private:
  int island_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A request that cannot be satisfied by construction (too many lines to
// remove, instance too large for enumeration, ...).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace casc
