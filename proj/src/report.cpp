#include "casc/report.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace casc {

MonteCarloReport make_report(double deterministic_yield, std::span<const double> yields) {
  MonteCarloReport r;
  r.det = deterministic_yield;
  r.histogram.assign(100, 0);
  r.runs = static_cast<long>(yields.size());
  if (yields.empty()) return r;

  r.max = *std::max_element(yields.begin(), yields.end());
  r.min = *std::min_element(yields.begin(), yields.end());
  double shift = 0.0;
  for (double y : yields) shift += y - yields[0];
  r.ave = yields[0] + shift / static_cast<double>(yields.size());
  double ss = 0.0;
  for (double y : yields) ss += (y - r.ave) * (y - r.ave);
  r.stdd = std::sqrt(ss / static_cast<double>(yields.size()));
  // Summation order can leave the mean a hair outside [min, max].
  r.ave = std::clamp(r.ave, r.min, r.max);

  for (double y : yields) {
    const int bin = std::clamp(static_cast<int>(std::floor(y)), 0, 99);
    ++r.histogram[bin];
  }
  return r;
}

void write_report(const MonteCarloReport& report, std::ostream& out) {
  out << "DetY,MaxY,MinY,AveY,StddY\n";
  out << format_double(report.det) << ',' << format_double(report.max) << ','
      << format_double(report.min) << ',' << format_double(report.ave) << ','
      << format_double(report.stdd) << '\n';
}

void write_histogram(const MonteCarloReport& report, std::ostream& out) {
  out << "yield_lo,yield_hi,count\n";
  for (std::size_t k = 0; k < report.histogram.size(); ++k)
    out << k << ',' << k + 1 << ',' << report.histogram[k] << '\n';
}

void write_search_log(const SearchReport& report, std::ostream& out) {
  out << "iteration,objective,step\n";
  for (const auto& it : report.log)
    out << it.iteration << ',' << format_double(it.objective) << ',' << format_double(it.step)
        << '\n';
  if (report.candidates.empty()) return;
  out << "round,stage,sbar,objective\n";
  for (const auto& c : report.candidates)
    out << c.round << ',' << c.stage << ',' << format_double(c.sbar) << ','
        << format_double(c.objective) << '\n';
}

void write_contingency(const ContingencyResult& result, std::ostream& out) {
  out << "line_id\n";
  for (int id : result.line_ids) out << id << '\n';
}

}  // namespace casc
