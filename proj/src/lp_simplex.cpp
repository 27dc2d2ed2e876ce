#include "lp_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace casc::lp {
namespace {

struct Tableau {
  int m = 0, cols = 0;  // cols excludes the rhs column
  std::vector<double> a;
  std::vector<int> basis;

  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * (cols + 1) + j]; }
  double& rhs(int i) { return at(i, cols); }

  void pivot(int r, int c) {
    const double p = at(r, c);
    for (int j = 0; j <= cols; ++j) at(r, j) /= p;
    for (int i = 0; i < m; ++i) {
      if (i == r) continue;
      const double f = at(i, c);
      if (f == 0.0) continue;
      for (int j = 0; j <= cols; ++j) at(i, j) -= f * at(r, j);
    }
    basis[r] = c;
  }

  // Maximizes cost.x over columns flagged in `allowed`. Returns false when
  // unbounded.
  bool optimize(const std::vector<double>& cost, const std::vector<char>& allowed, double eps) {
    for (int iter = 0; iter < 50000; ++iter) {
      int enter = -1;
      for (int j = 0; j < cols && enter < 0; ++j) {
        if (!allowed[j]) continue;
        double reduced = -cost[j];
        for (int i = 0; i < m; ++i) reduced += cost[basis[i]] * at(i, j);
        if (reduced < -eps) enter = j;
      }
      if (enter < 0) return true;
      int leave = -1;
      double best = 0.0;
      for (int i = 0; i < m; ++i) {
        const double v = at(i, enter);
        if (v <= eps) continue;
        const double ratio = rhs(i) / v;
        if (leave < 0 || ratio < best - eps ||
            (std::abs(ratio - best) <= eps && basis[i] < basis[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
    throw std::runtime_error("simplex: iteration limit");
  }

  double value(const std::vector<double>& cost) {
    double v = 0.0;
    for (int i = 0; i < m; ++i) v += cost[basis[i]] * rhs(i);
    return v;
  }
};

}  // namespace

Result solve(const Problem& problem, double eps) {
  const int n = problem.vars;
  std::vector<std::vector<double>> rows = problem.rows;
  std::vector<Sense> senses = problem.senses;
  std::vector<double> rhs = problem.rhs;
  for (int j = 0; j < static_cast<int>(problem.upper.size()); ++j) {
    if (!std::isfinite(problem.upper[j])) continue;
    std::vector<double> row(n, 0.0);
    row[j] = 1.0;
    rows.push_back(std::move(row));
    senses.push_back(Sense::Le);
    rhs.push_back(problem.upper[j]);
  }
  const int m = static_cast<int>(rows.size());
  for (int i = 0; i < m; ++i) {
    if (rhs[i] < 0.0) {
      for (double& v : rows[i]) v = -v;
      rhs[i] = -rhs[i];
      if (senses[i] == Sense::Le) senses[i] = Sense::Ge;
      else if (senses[i] == Sense::Ge) senses[i] = Sense::Le;
    }
  }

  int slacks = 0, artificials = 0;
  for (Sense s : senses) {
    if (s != Sense::Eq) ++slacks;
    if (s != Sense::Le) ++artificials;
  }
  Tableau t;
  t.m = m;
  t.cols = n + slacks + artificials;
  t.a.assign(static_cast<std::size_t>(m) * (t.cols + 1), 0.0);
  t.basis.assign(m, -1);
  int next_slack = n, next_art = n + slacks;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) t.at(i, j) = rows[i][j];
    t.rhs(i) = rhs[i];
    if (senses[i] == Sense::Le) {
      t.at(i, next_slack) = 1.0;
      t.basis[i] = next_slack++;
    } else {
      if (senses[i] == Sense::Ge) t.at(i, next_slack++) = -1.0;
      t.at(i, next_art) = 1.0;
      t.basis[i] = next_art++;
    }
  }

  const int first_art = n + slacks;
  Result result;
  if (artificials > 0) {
    std::vector<double> cost(t.cols, 0.0);
    for (int j = first_art; j < t.cols; ++j) cost[j] = -1.0;
    std::vector<char> allowed(t.cols, 1);
    t.optimize(cost, allowed, eps);
    double scale = 1.0;
    for (double b : rhs) scale = std::max(scale, std::abs(b));
    if (t.value(cost) < -eps * scale) return result;
    for (int i = 0; i < m; ++i) {
      if (t.basis[i] < first_art) continue;
      for (int j = 0; j < first_art; ++j) {
        if (std::abs(t.at(i, j)) > eps) {
          t.pivot(i, j);
          break;
        }
      }
    }
  }

  std::vector<double> cost(t.cols, 0.0);
  for (int j = 0; j < n; ++j) cost[j] = problem.objective.empty() ? 0.0 : problem.objective[j];
  std::vector<char> allowed(t.cols, 1);
  for (int j = first_art; j < t.cols; ++j) allowed[j] = 0;
  if (!t.optimize(cost, allowed, eps)) {
    result.status = Status::Unbounded;
    return result;
  }
  result.status = Status::Optimal;
  result.x.assign(n, 0.0);
  for (int i = 0; i < m; ++i)
    if (t.basis[i] < n) result.x[t.basis[i]] = std::max(0.0, t.rhs(i));
  result.objective = 0.0;
  for (int j = 0; j < n; ++j) result.objective += cost[j] * result.x[j];
  return result;
}

}  // namespace casc::lp
