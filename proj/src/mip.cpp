#include "casc/mip.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "casc/cascade.hpp"
#include "casc/errors.hpp"
#include "casc/powerflow.hpp"
#include "lp_simplex.hpp"

namespace casc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string var_name(const char* prefix, int round, int id) {
  return std::string(prefix) + '_' + std::to_string(round) + '_' + std::to_string(id);
}

void add_term(MipConstraint& c, int var, double coef) {
  if (var >= 0 && coef != 0.0) c.terms.push_back({var, coef});
}

void write_term(std::ostream& out, std::string& line, bool first, double coef,
                const std::string& name) {
  std::string t;
  if (coef < 0.0) t = first ? "- " : " - ";
  else if (!first) t = " + ";
  const double a = std::abs(coef);
  if (a != 1.0) t += format_double(a) + ' ';
  t += name;
  if (line.size() + t.size() > 78) {
    out << line << '\n';
    line = "   ";
  }
  line += t;
}

const char* sense_text(MipSense s) {
  switch (s) {
    case MipSense::Le: return " <= ";
    case MipSense::Ge: return " >= ";
    case MipSense::Eq: return " = ";
  }
  return " = ";
}

}  // namespace

int MipModel::binary_count() const {
  return static_cast<int>(
      std::count_if(variables_.begin(), variables_.end(), [](const auto& v) { return v.binary; }));
}

int MipModel::index(Var var, int round, int k) const {
  const int base = (round - 1) * block_;
  const int m = lines_;
  switch (var) {
    case Var::f: return base + k;
    case Var::pi: return base + m + k;
    case Var::nu: return base + 2 * m + k;
    case Var::p: return base + 3 * m + k;
    case Var::n: return base + 4 * m + k;
    case Var::y: return base + 5 * m + k;
    case Var::phi: return base + 6 * m + k;
    case Var::d:
      return demand_pos_[k] < 0 ? -1 : base + 6 * m + buses_ + demand_pos_[k];
    case Var::s:
      return supply_pos_[k] < 0 ? -1 : base + 6 * m + buses_ + demand_count_ + supply_pos_[k];
  }
  return -1;
}

MipModel build_mip(const Grid& grid, int rounds, std::span<const double> big_m) {
  if (rounds < 1) throw ConfigError("export-mip: rounds must be >= 1");
  const int n = grid.bus_count(), m = grid.line_count();
  if (!big_m.empty() && static_cast<int>(big_m.size()) != m)
    throw ConfigError("export-mip: big_m needs one value per line");

  MipModel model;
  model.rounds_ = rounds;
  model.buses_ = n;
  model.lines_ = m;
  model.demand_pos_.assign(n, -1);
  model.supply_pos_.assign(n, -1);
  int supply_count = 0;
  for (int i = 0; i < n; ++i) {
    const double b = grid.buses()[i].beta;
    if (b < 0.0) {
      model.demand_pos_[i] = model.demand_count_++;
      model.total_demand_ += -b;
    } else if (b > 0.0) {
      model.supply_pos_[i] = supply_count++;
    }
  }
  model.block_ = 6 * m + n + model.demand_count_ + supply_count;
  const double D = model.total_demand_;

  double x_max = 0.0;
  for (const auto& l : grid.lines()) x_max = std::max(x_max, l.reactance);
  if (big_m.empty()) model.big_m_.assign(m, x_max * D * m);
  else model.big_m_.assign(big_m.begin(), big_m.end());

  using V = MipModel::Var;
  auto& vars = model.variables_;
  vars.resize(static_cast<std::size_t>(rounds) * model.block_);
  for (int r = 1; r <= rounds; ++r) {
    for (int j = 0; j < m; ++j) {
      const int id = grid.lines()[j].id;
      vars[model.index(V::f, r, j)] = {var_name("f", r, id), -kInf, kInf, false};
      vars[model.index(V::pi, r, j)] = {var_name("pi", r, id), 0.0, kInf, false};
      vars[model.index(V::nu, r, j)] = {var_name("nu", r, id), 0.0, kInf, false};
      vars[model.index(V::p, r, j)] = {var_name("p", r, id), 0.0, 1.0, true};
      vars[model.index(V::n, r, j)] = {var_name("n", r, id), 0.0, 1.0, true};
      vars[model.index(V::y, r, j)] = {var_name("y", r, id), 0.0, 1.0, true};
    }
    for (int i = 0; i < n; ++i) {
      const auto& bus = grid.buses()[i];
      vars[model.index(V::phi, r, i)] = {var_name("phi", r, bus.id), -kInf, kInf, false};
      if (const int d = model.index(V::d, r, i); d >= 0)
        vars[d] = {var_name("d", r, bus.id), 0.0, -bus.beta, false};
      if (const int s = model.index(V::s, r, i); s >= 0)
        vars[s] = {var_name("s", r, bus.id), 0.0, bus.beta, false};
    }
  }

  auto& cons = model.constraints_;
  for (int r = 1; r <= rounds; ++r) {
    const std::string rs = std::to_string(r);
    for (int i = 0; i < n; ++i) {
      MipConstraint c{"bal_" + rs + '_' + std::to_string(grid.buses()[i].id), {}, MipSense::Eq, 0.0};
      for (int j : grid.incident(i))
        add_term(c, model.index(V::f, r, j), grid.tail(j) == i ? 1.0 : -1.0);
      add_term(c, model.index(V::s, r, i), -1.0);
      add_term(c, model.index(V::d, r, i), 1.0);
      cons.push_back(std::move(c));
    }
    auto per_line = [&](const char* family, auto&& fill) {
      for (int j = 0; j < m; ++j) {
        MipConstraint c{std::string(family) + '_' + rs + '_' + std::to_string(grid.lines()[j].id),
                        {}, MipSense::Le, 0.0};
        fill(c, j);
        cons.push_back(std::move(c));
      }
    };
    auto tripped_before = [&](MipConstraint& c, int j, double coef) {
      for (int h = 1; h < r; ++h) add_term(c, model.index(V::y, h, j), coef);
    };
    per_line("def", [&](MipConstraint& c, int j) {
      add_term(c, model.index(V::f, r, j), 1.0);
      add_term(c, model.index(V::pi, r, j), -1.0);
      add_term(c, model.index(V::nu, r, j), 1.0);
      c.sense = MipSense::Eq;
    });
    per_line("pos", [&](MipConstraint& c, int j) {
      add_term(c, model.index(V::pi, r, j), 1.0);
      add_term(c, model.index(V::p, r, j), -D);
    });
    per_line("neg", [&](MipConstraint& c, int j) {
      add_term(c, model.index(V::nu, r, j), 1.0);
      add_term(c, model.index(V::n, r, j), -D);
    });
    per_line("sgn", [&](MipConstraint& c, int j) {
      add_term(c, model.index(V::p, r, j), 1.0);
      add_term(c, model.index(V::n, r, j), 1.0);
      tripped_before(c, j, 1.0);
      c.sense = MipSense::Eq;
      c.rhs = 1.0;
    });
    per_line("over", [&](MipConstraint& c, int j) {
      add_term(c, model.index(V::pi, r, j), 1.0);
      add_term(c, model.index(V::nu, r, j), 1.0);
      add_term(c, model.index(V::y, r, j), -D);
      c.rhs = grid.lines()[j].flow_limit;
    });
    if (r < rounds) {
      per_line("trip", [&](MipConstraint& c, int j) {
        add_term(c, model.index(V::pi, r, j), 1.0);
        add_term(c, model.index(V::nu, r, j), 1.0);
        add_term(c, model.index(V::y, r, j), -grid.lines()[j].flow_limit);
        c.sense = MipSense::Ge;
      });
    } else {
      per_line("fin", [&](MipConstraint& c, int j) {
        add_term(c, model.index(V::pi, r, j), 1.0);
        add_term(c, model.index(V::nu, r, j), 1.0);
        c.rhs = grid.lines()[j].flow_limit;
      });
    }
    for (int side = 0; side < 2; ++side) {
      per_line(side == 0 ? "ohmu" : "ohml", [&](MipConstraint& c, int j) {
        add_term(c, model.index(V::phi, r, grid.tail(j)), 1.0);
        add_term(c, model.index(V::phi, r, grid.head(j)), -1.0);
        add_term(c, model.index(V::f, r, j), -grid.lines()[j].reactance);
        tripped_before(c, j, side == 0 ? -model.big_m_[j] : model.big_m_[j]);
        c.sense = side == 0 ? MipSense::Le : MipSense::Ge;
      });
    }
  }

  for (int i = 0; i < n; ++i)
    if (const int d = model.index(V::d, rounds, i); d >= 0) model.objective_.push_back({d, 1.0});
  return model;
}

void write_lp(const MipModel& model, std::ostream& out) {
  const auto& vars = model.variables();
  out << "\\ demand shedding, " << model.rounds() << " rounds\n";
  out << "Maximize\n";
  std::string line = " obj: ";
  if (model.objective().empty()) {
    std::cerr << "warning: no demand buses; objective is 0\n";
    line += '0';
  }
  for (std::size_t k = 0; k < model.objective().size(); ++k)
    write_term(out, line, k == 0, model.objective()[k].coef, vars[model.objective()[k].var].name);
  out << line << '\n';

  out << "Subject To\n";
  for (const auto& c : model.constraints()) {
    line = ' ' + c.name + ": ";
    if (c.terms.empty()) line += "0 " + vars[0].name;
    for (std::size_t k = 0; k < c.terms.size(); ++k)
      write_term(out, line, k == 0, c.terms[k].coef, vars[c.terms[k].var].name);
    line += sense_text(c.sense);
    line += format_double(c.rhs);
    out << line << '\n';
  }

  out << "Bounds\n";
  for (const auto& v : vars) {
    if (v.binary) continue;
    if (v.lower == -kInf && v.upper == kInf) {
      out << ' ' << v.name << " free\n";
    } else if (v.upper != kInf) {
      out << ' ' << format_double(v.lower) << " <= " << v.name << " <= "
          << format_double(v.upper) << '\n';
    }
  }
  out << "Binary\n";
  for (const auto& v : vars)
    if (v.binary) out << ' ' << v.name << '\n';
  out << "End\n";
}

void write_lp(const MipModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  write_lp(model, out);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

double max_violation(const MipModel& model, std::span<const double> x) {
  const auto& vars = model.variables();
  if (x.size() != vars.size()) throw std::invalid_argument("max_violation: size mismatch");
  double worst = 0.0;
  for (std::size_t k = 0; k < vars.size(); ++k) {
    worst = std::max({worst, vars[k].lower - x[k], x[k] - vars[k].upper});
    if (vars[k].binary) worst = std::max(worst, std::abs(x[k] - std::round(x[k])));
  }
  for (const auto& c : model.constraints()) {
    double lhs = 0.0;
    for (const auto& t : c.terms) lhs += t.coef * x[t.var];
    switch (c.sense) {
      case MipSense::Le: worst = std::max(worst, lhs - c.rhs); break;
      case MipSense::Ge: worst = std::max(worst, c.rhs - lhs); break;
      case MipSense::Eq: worst = std::max(worst, std::abs(lhs - c.rhs)); break;
    }
  }
  return worst;
}

namespace {

// One round of a fixed outage pattern: which lines are up, which trip.
struct RoundLp {
  IslandPartition part;
  std::vector<std::vector<double>> ptdf;  // [line][bus]
};

RoundLp round_topology(const Grid& grid, FlowSolver& solver, const std::vector<char>& active,
                       std::span<const double> beta) {
  RoundLp out;
  out.part = islands(grid, active, beta);
  const int n = grid.bus_count(), m = grid.line_count();
  out.ptdf.assign(m, std::vector<double>(n, 0.0));
  std::vector<double> unit(n, 0.0), flows(m, 0.0), phases(n, 0.0);
  for (std::size_t h = 0; h < out.part.islands.size(); ++h) {
    const auto& island = out.part.islands[h];
    if (island.lines.empty()) continue;
    const int ref = island.buses[0];
    for (std::size_t a = 1; a < island.buses.size(); ++a) {
      const int v = island.buses[a];
      unit[v] = 1.0;
      unit[ref] = -1.0;
      solver.solve_island(island, static_cast<int>(h), unit, flows, phases);
      for (int j : island.lines) out.ptdf[j][v] = flows[j];
      unit[v] = 0.0;
      unit[ref] = 0.0;
    }
  }
  return out;
}

struct RoundSolution {
  bool feasible = false;
  double objective = 0.0;
  std::vector<double> injection;  // per bus
};

// LP over s (generators) and d (loads) for one round. `sign[j]` is +1/-1 for
// a line tripping this round, 0 for a line that must stay within its limit,
// and anything else for a dead line.
RoundSolution solve_round(const Grid& grid, const RoundLp& topo, const std::vector<int>& sign,
                          bool maximize_demand) {
  const int n = grid.bus_count();
  std::vector<int> col(n, -1);
  int vars = 0;
  for (int i = 0; i < n; ++i)
    if (grid.buses()[i].beta != 0.0) col[i] = vars++;

  lp::Problem p;
  p.vars = vars;
  p.objective.assign(vars, 0.0);
  p.upper.assign(vars, 0.0);
  std::vector<double> inj_coef(vars, 0.0);  // d(injection)/d(var)
  for (int i = 0; i < n; ++i) {
    if (col[i] < 0) continue;
    const double b = grid.buses()[i].beta;
    p.upper[col[i]] = std::abs(b);
    inj_coef[col[i]] = b > 0.0 ? 1.0 : -1.0;
    if (b < 0.0 && maximize_demand) p.objective[col[i]] = 1.0;
  }
  for (const auto& island : topo.part.islands) {
    std::vector<double> row(vars, 0.0);
    bool any = false;
    for (int v : island.buses)
      if (col[v] >= 0) row[col[v]] = inj_coef[col[v]], any = true;
    if (any) p.add(std::move(row), lp::Sense::Eq, 0.0);
  }
  for (int j = 0; j < grid.line_count(); ++j) {
    if (sign[j] < -1 || sign[j] > 1) continue;
    std::vector<double> row(vars, 0.0);
    for (int i = 0; i < n; ++i)
      if (col[i] >= 0) row[col[i]] = topo.ptdf[j][i] * inj_coef[col[i]];
    const double u = grid.lines()[j].flow_limit;
    if (sign[j] == 0) {
      auto neg = row;
      for (double& v : neg) v = -v;
      p.add(std::move(row), lp::Sense::Le, u);
      p.add(std::move(neg), lp::Sense::Le, u);
    } else {
      for (double& v : row) v *= sign[j];
      p.add(std::move(row), lp::Sense::Ge, u);
    }
  }

  const auto r = lp::solve(p);
  RoundSolution out;
  if (r.status != lp::Status::Optimal) return out;
  out.feasible = true;
  out.objective = r.objective;
  out.injection.assign(n, 0.0);
  for (int i = 0; i < n; ++i)
    if (col[i] >= 0) out.injection[i] = inj_coef[col[i]] * r.x[col[i]];
  return out;
}

constexpr int kDead = 2;

}  // namespace

EnumerationResult verify_by_enumeration(const Grid& grid, int rounds) {
  const int n = grid.bus_count(), m = grid.line_count();
  if (rounds < 1 || rounds > 2 || m > 6)
    throw ConfigError("verify_by_enumeration: instance too large (needs m <= 6, R <= 2)");
  const MipModel model = build_mip(grid, rounds);
  const auto beta = grid.injections();
  FlowSolver solver(grid);

  long patterns = 1;
  for (int j = 0; j < m; ++j) patterns *= rounds;

  EnumerationResult best;
  best.objective = -1.0;
  std::vector<int> best_trip;
  std::vector<std::vector<double>> best_inj;

  std::vector<int> trip(m, 0);  // 0 = never, else the round it trips in
  for (long code = 0; code < patterns; ++code) {
    long rest = code;
    for (int j = 0; j < m; ++j) {
      trip[j] = static_cast<int>(rest % rounds);
      rest /= rounds;
    }
    std::vector<std::vector<double>> injections;
    double value = 0.0;
    bool ok = true;
    for (int r = 1; r <= rounds && ok; ++r) {
      std::vector<char> active(m, 0);
      std::vector<int> tripping;
      for (int j = 0; j < m; ++j) {
        active[j] = trip[j] == 0 || trip[j] >= r;
        if (trip[j] == r) tripping.push_back(j);
      }
      const auto topo = round_topology(grid, solver, active, beta);
      std::vector<int> sign(m, kDead);
      for (int j = 0; j < m; ++j)
        if (active[j]) sign[j] = 0;
      RoundSolution sol;
      const long combos = 1L << tripping.size();
      for (long s = 0; s < combos && !sol.feasible; ++s) {
        for (std::size_t k = 0; k < tripping.size(); ++k)
          sign[tripping[k]] = (s >> k) & 1 ? -1 : 1;
        sol = solve_round(grid, topo, sign, r == rounds);
      }
      ok = sol.feasible;
      if (ok) {
        injections.push_back(std::move(sol.injection));
        if (r == rounds) value = sol.objective;
      }
    }
    if (ok && value > best.objective + 1e-12 * std::max(1.0, value)) {
      best.objective = value;
      best_trip = trip;
      best_inj = std::move(injections);
    }
  }
  best.patterns = patterns;
  if (best.objective < 0.0) throw InfeasibleError("verify_by_enumeration: no feasible pattern");

  using V = MipModel::Var;
  auto& x = best.assignment;
  x.assign(model.variables().size(), 0.0);
  std::vector<double> flows(m, 0.0), phases(n, 0.0);
  for (int r = 1; r <= rounds; ++r) {
    std::vector<char> active(m, 0);
    for (int j = 0; j < m; ++j) active[j] = best_trip[j] == 0 || best_trip[j] >= r;
    const auto& inj = best_inj[r - 1];
    const auto part = islands(grid, active, inj);
    std::fill(flows.begin(), flows.end(), 0.0);
    solver.solve(part, inj, flows, phases);
    for (const auto& island : part.islands) {
      double lo = kInf;
      for (int v : island.buses) lo = std::min(lo, phases[v]);
      for (int v : island.buses) x[model.index(V::phi, r, v)] = phases[v] - lo;
    }
    for (int j = 0; j < m; ++j) {
      if (!active[j]) continue;
      const double f = flows[j];
      x[model.index(V::f, r, j)] = f;
      x[model.index(V::pi, r, j)] = std::max(f, 0.0);
      x[model.index(V::nu, r, j)] = std::max(-f, 0.0);
      x[model.index(f >= 0.0 ? V::p : V::n, r, j)] = 1.0;
      if (best_trip[j] == r) x[model.index(V::y, r, j)] = 1.0;
    }
    for (int i = 0; i < n; ++i) {
      if (const int d = model.index(V::d, r, i); d >= 0) x[d] = -inj[i];
      if (const int s = model.index(V::s, r, i); s >= 0) x[s] = inj[i];
    }
  }

  // Proportional benchmark: each initial island scaled down until its worst
  // line sits at its limit.
  auto part = islands(grid);
  std::vector<double> demand(n), supply(n);
  for (int i = 0; i < n; ++i) {
    demand[i] = std::max(0.0, -beta[i]);
    supply[i] = std::max(0.0, beta[i]);
  }
  double proportional = 0.0;
  for (std::size_t h = 0; h < part.islands.size(); ++h) {
    const auto& island = part.islands[h];
    rebalance_island(island, demand, supply);
    std::vector<double> b(n, 0.0);
    double D = 0.0;
    for (int v : island.buses) {
      b[v] = supply[v] - demand[v];
      D += demand[v];
    }
    solver.solve_island(island, static_cast<int>(h), b, flows, phases);
    double psi = 1.0;
    for (int j : island.lines) psi = std::max(psi, std::abs(flows[j]) / grid.lines()[j].flow_limit);
    proportional += D / psi;
  }
  best.proportional =
      std::abs(best.objective - proportional) <= 1e-9 * std::max(1.0, model.total_demand());
  return best;
}

}  // namespace casc
