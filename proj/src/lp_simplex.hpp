#pragma once

#include <limits>
#include <utility>
#include <vector>

namespace casc::lp {

enum class Sense { Le, Ge, Eq };

// max c.x  s.t.  rows, 0 <= x <= upper.
struct Problem {
  int vars = 0;
  std::vector<double> objective;
  std::vector<std::vector<double>> rows;
  std::vector<Sense> senses;
  std::vector<double> rhs;
  std::vector<double> upper;  // empty means unbounded above

  void add(std::vector<double> row, Sense sense, double b) {
    rows.push_back(std::move(row));
    senses.push_back(sense);
    rhs.push_back(b);
  }
};

enum class Status { Optimal, Infeasible, Unbounded };

struct Result {
  Status status = Status::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
};

// Dense two-phase simplex with Bland's rule. Meant for the small systems the
// enumeration verifier produces.
Result solve(const Problem& problem, double eps = 1e-9);

}  // namespace casc::lp
