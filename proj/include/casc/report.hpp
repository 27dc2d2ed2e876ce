#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "casc/contingency.hpp"
#include "casc/optimizer.hpp"

namespace casc {

struct MonteCarloReport {
  double det = 0.0;  // yield of the deterministic run
  double max = 0.0;
  double min = 0.0;
  double ave = 0.0;
  double stdd = 0.0;  // population standard deviation
  std::vector<long> histogram;  // 100 bins of width 1; bin 99 also holds 100
  long runs = 0;
};

MonteCarloReport make_report(double deterministic_yield, std::span<const double> yields);

/// `DetY,MaxY,MinY,AveY,StddY` and one row of values.
void write_report(const MonteCarloReport& report, std::ostream& out);
/// `yield_lo,yield_hi,count` per bin.
void write_histogram(const MonteCarloReport& report, std::ostream& out);

/// `iteration,objective,step`, then the grid-search candidates as
/// `round,stage,sbar,objective` when present.
void write_search_log(const SearchReport& report, std::ostream& out);

/// `line_id` per selected line.
void write_contingency(const ContingencyResult& result, std::ostream& out);

}  // namespace casc
