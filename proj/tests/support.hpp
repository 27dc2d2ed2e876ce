#pragma once
// Fixtures and independent oracles shared by the unit tests and the
// acceptance runner. Nothing here calls into the solver under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <tuple>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "casc/grid.hpp"

namespace support {

struct B {
  int id;
  double beta;
};
struct L {
  int id, tail, head;
  double x, u;
};

inline casc::Grid make_grid(const std::vector<B>& bs, const std::vector<L>& ls) {
  std::vector<casc::Bus> buses;
  for (const auto& b : bs) buses.push_back({b.id, b.beta, std::max(0.0, b.beta)});
  std::vector<casc::Line> lines;
  for (const auto& l : ls) lines.push_back({l.id, l.tail, l.head, l.x, l.u});
  return casc::Grid(std::move(buses), std::move(lines));
}

// Two buses, one line, beta = (+s, -s).
inline casc::Grid single_line(double s, double u, double x = 1.0) {
  return make_grid({{0, s}, {1, -s}}, {{0, 0, 1, x, u}});
}

// Buses a=0, b=1, c=2; lines ab, bc, ca with unit reactance.
inline casc::Grid triangle(double u = 10.0) {
  return make_grid({{0, 3}, {1, -3}, {2, 0}}, {{0, 0, 1, 1, u}, {1, 1, 2, 1, u}, {2, 2, 0, 1, u}});
}

// Random connected grid: a random tree plus extra lines, integer-valued
// balanced injections, reactances in [0.5, 2]. Limits are set afterwards by
// callers that need them; here u = 1e6.
inline casc::Grid random_connected(std::mt19937_64& rng, int n, int m) {
  std::uniform_real_distribution<double> x(0.5, 2.0);
  std::vector<L> ls;
  std::set<std::pair<int, int>> used;
  for (int v = 1; v < n; ++v) {
    const int p = std::uniform_int_distribution<int>(0, v - 1)(rng);
    ls.push_back({static_cast<int>(ls.size()), p, v, x(rng), 1e6});
    used.insert({std::min(p, v), std::max(p, v)});
  }
  const int max_lines = n * (n - 1) / 2;
  while (static_cast<int>(ls.size()) < std::min(m, max_lines)) {
    int a = std::uniform_int_distribution<int>(0, n - 1)(rng);
    int b = std::uniform_int_distribution<int>(0, n - 1)(rng);
    if (a == b || used.count({std::min(a, b), std::max(a, b)})) continue;
    used.insert({std::min(a, b), std::max(a, b)});
    if (rng() & 1) std::swap(a, b);
    ls.push_back({static_cast<int>(ls.size()), a, b, x(rng), 1e6});
  }
  std::vector<B> bs(n);
  double total = 0.0;
  for (int v = 0; v < n; ++v) {
    const int kind = std::uniform_int_distribution<int>(0, 2)(rng);
    const double mag = std::uniform_int_distribution<int>(1, 9)(rng);
    bs[v] = {v, kind == 0 ? 0.0 : (kind == 1 ? mag : -mag)};
    total += bs[v].beta;
  }
  // Push the imbalance onto one bus so the grid balances exactly.
  bs[0].beta -= total;
  return make_grid(bs, ls);
}

inline casc::Grid with_limits(const casc::Grid& g, const std::vector<double>& u) {
  std::vector<casc::Line> lines(g.lines().begin(), g.lines().end());
  for (std::size_t j = 0; j < lines.size(); ++j) lines[j].flow_limit = u[j];
  return g.with_lines(std::move(lines));
}

// ---------------------------------------------------------------------------
// Dense flow oracle: Gaussian elimination with partial pivoting on each
// connected component's reduced Laplacian. `active` empty = every line.
inline std::vector<double> dense_flows(const casc::Grid& g, const std::vector<double>& beta,
                                       const std::vector<char>& active = {}) {
  const int n = g.bus_count(), m = g.line_count();
  auto on = [&](int j) { return active.empty() || active[j]; };
  std::vector<int> comp(n, -1);
  int comps = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<int> stack{s};
    comp[s] = comps;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int j = 0; j < m; ++j) {
        if (!on(j)) continue;
        const int a = g.lines()[j].tail, b = g.lines()[j].head;
        const int ia = g.bus_index(a), ib = g.bus_index(b);
        int w = -1;
        if (ia == v) w = ib;
        if (ib == v) w = ia;
        if (w >= 0 && comp[w] < 0) {
          comp[w] = comps;
          stack.push_back(w);
        }
      }
    }
    ++comps;
  }
  std::vector<double> phase(n, 0.0);
  for (int c = 0; c < comps; ++c) {
    std::vector<int> members;
    for (int v = 0; v < n; ++v)
      if (comp[v] == c) members.push_back(v);
    const int k = static_cast<int>(members.size()) - 1;  // members[0] is the reference
    if (k <= 0) continue;
    std::map<int, int> pos;
    for (int a = 1; a <= k; ++a) pos[members[a]] = a - 1;
    std::vector<std::vector<double>> A(k, std::vector<double>(k + 1, 0.0));
    for (int j = 0; j < m; ++j) {
      if (!on(j)) continue;
      const int a = g.bus_index(g.lines()[j].tail), b = g.bus_index(g.lines()[j].head);
      if (comp[a] != c) continue;
      const double y = 1.0 / g.lines()[j].reactance;
      const bool ra = pos.count(a), rb = pos.count(b);
      if (ra) A[pos[a]][pos[a]] += y;
      if (rb) A[pos[b]][pos[b]] += y;
      if (ra && rb) {
        A[pos[a]][pos[b]] -= y;
        A[pos[b]][pos[a]] -= y;
      }
    }
    for (int a = 0; a < k; ++a) A[a][k] = beta[members[a + 1]];
    for (int col = 0; col < k; ++col) {
      int piv = col;
      for (int r = col + 1; r < k; ++r)
        if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
      std::swap(A[col], A[piv]);
      for (int r = 0; r < k; ++r) {
        if (r == col) continue;
        const double f = A[r][col] / A[col][col];
        for (int q = col; q <= k; ++q) A[r][q] -= f * A[col][q];
      }
    }
    for (int a = 0; a < k; ++a) phase[members[a + 1]] = A[a][k] / A[a][a];
  }
  std::vector<double> f(m, 0.0);
  for (int j = 0; j < m; ++j) {
    if (!on(j)) continue;
    const int a = g.bus_index(g.lines()[j].tail), b = g.bus_index(g.lines()[j].head);
    f[j] = (phase[a] - phase[b]) / g.lines()[j].reactance;
  }
  return f;
}

// ---------------------------------------------------------------------------
// Minimal CPLEX-LP reader, written against the format description rather
// than the writer: sections, `name:` labels, signed terms across continuation
// lines, <= / >= / =, bounds incl. `free`, and a Binary list.
struct ParsedConstraint {
  std::string name;
  std::map<std::string, double> terms;
  std::string op;
  double rhs = 0.0;
};

struct ParsedLp {
  bool maximize = false;
  std::map<std::string, double> objective;
  std::vector<ParsedConstraint> constraints;
  std::map<std::string, std::pair<double, double>> bounds;
  std::set<std::string> binaries;
  std::set<std::string> variables;
};

inline bool parse_lp(const std::string& text, ParsedLp& out, std::string& error) {
  std::istringstream in(text);
  std::string line, section;
  std::string pending;  // accumulated statement
  const double inf = std::numeric_limits<double>::infinity();

  auto is_number = [](const std::string& t) {
    if (t.empty()) return false;
    char* end = nullptr;
    std::strtod(t.c_str(), &end);
    return end && *end == '\0';
  };
  auto parse_expr = [&](std::istringstream& ss, std::map<std::string, double>& terms,
                        std::string& op, double& rhs) -> bool {
    std::string tok;
    double sign = 1.0, coef = 1.0;
    bool have_coef = false;
    while (ss >> tok) {
      if (tok == "+") { sign = 1.0; continue; }
      if (tok == "-") { sign = -1.0; continue; }
      if (tok == "<=" || tok == ">=" || tok == "=" || tok == "=<" || tok == "=>") {
        op = tok == "=<" ? "<=" : tok == "=>" ? ">=" : tok;
        std::string r;
        if (!(ss >> r) || !is_number(r)) return false;
        rhs = std::stod(r);
        return true;
      }
      if (is_number(tok)) {
        coef = std::stod(tok);
        have_coef = true;
        continue;
      }
      terms[tok] += sign * (have_coef ? coef : 1.0);
      out.variables.insert(tok);
      sign = 1.0;
      coef = 1.0;
      have_coef = false;
    }
    if (have_coef && coef == 0.0) return true;  // constant 0 objective
    return !have_coef;
  };

  auto flush = [&]() -> bool {
    if (pending.empty()) return true;
    std::string stmt = pending;
    pending.clear();
    std::string name;
    const auto colon = stmt.find(':');
    if (colon != std::string::npos) {
      name = stmt.substr(0, colon);
      name.erase(0, name.find_first_not_of(' '));
      stmt = stmt.substr(colon + 1);
    }
    std::istringstream ss(stmt);
    if (section == "objective") {
      std::string op;
      double rhs = 0.0;
      if (!parse_expr(ss, out.objective, op, rhs) || !op.empty()) return false;
      return true;
    }
    if (section == "constraints") {
      ParsedConstraint c;
      c.name = name;
      if (!parse_expr(ss, c.terms, c.op, c.rhs) || c.op.empty()) return false;
      out.constraints.push_back(std::move(c));
      return true;
    }
    return false;
  };

  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line[0] == '\\') continue;
    std::string t = line;
    t.erase(0, t.find_first_not_of(" \t"));
    std::string lower = t;
    std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
    auto header = [&](const std::string& h) { return lower == h; };
    if (header("maximize") || header("minimize") || header("subject to") || header("bounds") ||
        header("binary") || header("binaries") || header("end")) {
      if (!flush()) {
        error = "bad statement before line " + std::to_string(number);
        return false;
      }
      if (header("maximize")) { section = "objective"; out.maximize = true; }
      else if (header("minimize")) section = "objective";
      else if (header("subject to")) section = "constraints";
      else if (header("bounds")) section = "bounds";
      else if (header("end")) section = "end";
      else section = "binary";
      continue;
    }
    if (t.empty()) continue;
    if (section == "objective" || section == "constraints") {
      // A new statement starts with `name:`; anything else continues one.
      const bool labelled = t.find(':') != std::string::npos;
      if (labelled && !pending.empty() && !flush()) {
        error = "bad statement before line " + std::to_string(number);
        return false;
      }
      pending += ' ' + t;
    } else if (section == "bounds") {
      std::istringstream ss(t);
      std::vector<std::string> tok;
      std::string w;
      while (ss >> w) tok.push_back(w);
      if (tok.size() == 2 && tok[1] == "free") {
        out.bounds[tok[0]] = {-inf, inf};
      } else if (tok.size() == 5 && tok[1] == "<=" && tok[3] == "<=" && is_number(tok[0]) &&
                 is_number(tok[4])) {
        out.bounds[tok[2]] = {std::stod(tok[0]), std::stod(tok[4])};
      } else {
        error = "bad bound at line " + std::to_string(number);
        return false;
      }
    } else if (section == "binary") {
      std::istringstream ss(t);
      std::string w;
      while (ss >> w) out.binaries.insert(w);
    } else {
      error = "text outside a section at line " + std::to_string(number);
      return false;
    }
  }
  if (section != "end") {
    error = "missing End";
    return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Brute-force componentwise scaling: in each round every island picks a
// multiplier from {1} and the values that bring one of its lines exactly to
// its limit; deterministic strict tripping; round R divides by the worst
// overload. Returns the best terminal demand and the schedule reaching it.
struct OracleChoice {
  int round;
  std::vector<int> buses;  // ascending bus indices
  double lambda;
};

struct OracleResult {
  double value = -1.0;
  std::vector<OracleChoice> schedule;
  long leaves = 0;
};

namespace detail {

inline std::vector<std::vector<int>> components(const casc::Grid& g, const std::vector<char>& active,
                                                std::vector<std::vector<int>>* comp_lines) {
  const int n = g.bus_count(), m = g.line_count();
  std::vector<int> parent(n);
  for (int v = 0; v < n; ++v) parent[v] = v;
  std::function<int(int)> find = [&](int v) { return parent[v] == v ? v : parent[v] = find(parent[v]); };
  for (int j = 0; j < m; ++j)
    if (active[j]) {
      const int a = find(g.bus_index(g.lines()[j].tail)), b = find(g.bus_index(g.lines()[j].head));
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  std::map<int, int> id;
  std::vector<std::vector<int>> out;
  for (int v = 0; v < n; ++v) {
    const int r = find(v);
    if (!id.count(r)) {
      id[r] = static_cast<int>(out.size());
      out.emplace_back();
    }
    out[id[r]].push_back(v);
  }
  if (comp_lines) {
    comp_lines->assign(out.size(), {});
    for (int j = 0; j < m; ++j)
      if (active[j]) (*comp_lines)[id[find(g.bus_index(g.lines()[j].tail))]].push_back(j);
  }
  return out;
}

inline void rebalance(const std::vector<int>& comp, std::vector<double>& d, std::vector<double>& s) {
  double D = 0.0, S = 0.0;
  for (int v : comp) {
    D += d[v];
    S += s[v];
  }
  if (S == D) return;
  if (S <= 0.0) {
    for (int v : comp) d[v] = 0.0;
  } else if (D <= 0.0) {
    for (int v : comp) s[v] = 0.0;
  } else if (D > S) {
    for (int v : comp) d[v] *= S / D;
  } else {
    for (int v : comp) s[v] *= D / S;
  }
}

inline void search(const casc::Grid& g, int R, int round, std::vector<char> active,
                   std::vector<double> d, std::vector<double> s, std::vector<OracleChoice>& path,
                   OracleResult& best) {
  const int n = g.bus_count();
  std::vector<std::vector<int>> lines;
  const auto comps = components(g, active, &lines);
  std::vector<double> beta(n);
  for (int v = 0; v < n; ++v) beta[v] = s[v] - d[v];
  const auto f = dense_flows(g, beta, active);

  if (round == R) {
    double value = 0.0;
    for (std::size_t c = 0; c < comps.size(); ++c) {
      double psi = 1.0, D = 0.0;
      for (int j : lines[c]) psi = std::max(psi, std::abs(f[j]) / g.lines()[j].flow_limit);
      for (int v : comps[c]) D += d[v];
      value += D / psi;
    }
    ++best.leaves;
    if (value > best.value) {
      best.value = value;
      best.schedule = path;
    }
    return;
  }

  std::vector<std::vector<double>> cand(comps.size(), std::vector<double>{1.0});
  for (std::size_t c = 0; c < comps.size(); ++c) {
    double scale = 0.0;
    for (int v : comps[c]) scale += std::abs(beta[v]);
    for (int j : lines[c]) {
      const double a = std::abs(f[j]);
      if (a > 1e-12 * scale && g.lines()[j].flow_limit / a < 1.0)
        cand[c].push_back(g.lines()[j].flow_limit / a);
    }
  }
  std::vector<std::size_t> pick(comps.size(), 0);
  while (true) {
    auto d2 = d, s2 = s;
    auto act = active;
    const std::size_t mark = path.size();
    for (std::size_t c = 0; c < comps.size(); ++c) {
      const double lam = cand[c][pick[c]];
      if (lam != 1.0) path.push_back({round, comps[c], lam});
      for (int v : comps[c]) {
        d2[v] *= lam;
        s2[v] *= lam;
      }
    }
    std::vector<double> b2(n);
    for (int v = 0; v < n; ++v) b2[v] = s2[v] - d2[v];
    const auto f2 = dense_flows(g, b2, act);
    for (int j = 0; j < g.line_count(); ++j)
      if (act[j] && std::abs(f2[j]) / g.lines()[j].flow_limit > 1.0 + 1e-10) act[j] = 0;
    for (const auto& comp : components(g, act, nullptr)) rebalance(comp, d2, s2);
    search(g, R, round + 1, act, d2, s2, path, best);
    path.resize(mark);

    std::size_t c = 0;
    while (c < pick.size() && ++pick[c] == cand[c].size()) pick[c++] = 0;
    if (c == pick.size()) break;
  }
}

}  // namespace detail

inline OracleResult lambda_oracle(const casc::Grid& g, int R) {
  const int n = g.bus_count();
  std::vector<double> d(n), s(n);
  for (int v = 0; v < n; ++v) {
    d[v] = std::max(0.0, -g.buses()[v].beta);
    s[v] = std::max(0.0, g.buses()[v].beta);
  }
  std::vector<char> active(g.line_count(), 1);
  for (const auto& comp : detail::components(g, active, nullptr)) detail::rebalance(comp, d, s);
  OracleResult best;
  std::vector<OracleChoice> path;
  detail::search(g, R, 1, active, d, s, path, best);
  return best;
}

}  // namespace support
