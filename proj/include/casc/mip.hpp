#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "casc/grid.hpp"

namespace casc {

enum class MipSense { Le, Ge, Eq };

struct MipTerm {
  int var = 0;
  double coef = 0.0;
};

struct MipVariable {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;  // +/-inf for free variables
  bool binary = false;
};

struct MipConstraint {
  std::string name;
  std::vector<MipTerm> terms;
  MipSense sense = MipSense::Le;
  double rhs = 0.0;
};

// Mixed-integer model of optimal demand shedding over R rounds under the
// deterministic outage rule. Variables are laid out round-major; within a
// round: f, pi, nu, p, n, y per line, then phi per bus, d per demand bus and
// s per generator bus.
class MipModel {
 public:
  enum class Var { f, pi, nu, p, n, y, phi, d, s };

  int rounds() const { return rounds_; }
  const std::vector<MipVariable>& variables() const { return variables_; }
  const std::vector<MipConstraint>& constraints() const { return constraints_; }
  const std::vector<MipTerm>& objective() const { return objective_; }
  const std::vector<double>& big_m() const { return big_m_; }
  double total_demand() const { return total_demand_; }
  int binary_count() const;

  /// `k` is a line index for line variables and a bus index otherwise.
  /// Returns -1 for d/s at buses that are not demand/generator buses.
  int index(Var var, int round, int k) const;

  friend MipModel build_mip(const Grid& grid, int rounds, std::span<const double> big_m);

 private:
  int rounds_ = 0, buses_ = 0, lines_ = 0, block_ = 0;
  std::vector<int> demand_pos_, supply_pos_;
  int demand_count_ = 0;
  std::vector<MipVariable> variables_;
  std::vector<MipConstraint> constraints_;
  std::vector<MipTerm> objective_;
  std::vector<double> big_m_;
  double total_demand_ = 0.0;
};

/// M_j = x_max * D * m unless `big_m` (one value per line) is given.
MipModel build_mip(const Grid& grid, int rounds, std::span<const double> big_m = {});

/// CPLEX LP text. Identical models give identical bytes. Warns on stderr when
/// the objective is empty.
void write_lp(const MipModel& model, std::ostream& out);
void write_lp(const MipModel& model, const std::filesystem::path& path);

/// Largest violation of any constraint, bound or integrality requirement.
double max_violation(const MipModel& model, std::span<const double> x);

struct EnumerationResult {
  double objective = 0.0;
  // Optimum equals min(1, 1/psi_H) D_H summed over the initial islands, i.e.
  // what proportional per-island shedding achieves without any trips.
  bool proportional = false;
  std::vector<double> assignment;  // full MIP point attaining `objective`
  long patterns = 0;               // outage patterns examined
};

/// Exact optimum by enumerating trip rounds and flow signs and solving one LP
/// per round. Throws ConfigError beyond 6 lines or 2 rounds.
EnumerationResult verify_by_enumeration(const Grid& grid, int rounds);

}  // namespace casc
