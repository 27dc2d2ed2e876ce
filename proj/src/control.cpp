#include "casc/control.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "casc/errors.hpp"

namespace casc {

double affine_factor(const ControlTriple& t, double kappa) {
  if (kappa <= t.c) return 1.0;
  return std::min(1.0, std::max(0.0, t.b + t.s * (t.c - kappa)));
}

double apply_affine_law(const ControlTriple& t, double kappa, double demand) {
  return affine_factor(t, kappa) * demand;
}

ScheduleForm ControlSchedule::form() const {
  if (!by_bus.empty()) return ScheduleForm::PerBus;
  if (!segments.empty()) return ScheduleForm::Segmented;
  return ScheduleForm::Uniform;
}

std::optional<ControlTriple> ControlSchedule::lookup(int round, int bus_id,
                                                     int segment) const {
  if (round < 1 || round > rounds) return std::nullopt;
  if (auto it = by_bus.find({round, bus_id}); it != by_bus.end()) return it->second;
  if (segment >= 0 && static_cast<std::size_t>(round - 1) < by_segment.size()) {
    const auto& row = by_segment[round - 1];
    if (static_cast<std::size_t>(segment) < row.size() && row[segment]) return row[segment];
  }
  if (static_cast<std::size_t>(round - 1) < uniform.size()) return uniform[round - 1];
  return std::nullopt;
}

ControlSchedule ControlSchedule::none() { return {}; }

ControlSchedule ControlSchedule::make_uniform(std::vector<ControlTriple> per_round) {
  ControlSchedule s;
  s.rounds = static_cast<int>(per_round.size());
  for (const auto& t : per_round) s.uniform.emplace_back(t);
  return s;
}

ControlSchedule ControlSchedule::make_segmented(
    std::vector<std::vector<int>> segments,
    std::vector<std::vector<ControlTriple>> triples) {
  ControlSchedule s;
  s.rounds = static_cast<int>(triples.size());
  for (const auto& row : triples) {
    if (row.size() != segments.size())
      throw ConfigError("segmented schedule: triple count does not match segment count");
    s.by_segment.emplace_back(row.begin(), row.end());
  }
  s.segments = std::move(segments);
  return s;
}

std::vector<std::vector<int>> demand_segments(const Grid& grid, int H) {
  if (H < 1) throw ConfigError("segments: H must be >= 1");
  auto order = grid.demand_buses();
  const auto buses = grid.buses();
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (buses[a].beta != buses[b].beta) return buses[a].beta < buses[b].beta;
    return buses[a].id < buses[b].id;
  });
  const std::size_t L = order.size();
  std::vector<std::vector<int>> out(H);
  std::size_t pos = 0;
  for (int k = 0; k < H; ++k) {
    const std::size_t size = L / H + (static_cast<std::size_t>(k) < L % H ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) out[k].push_back(buses[order[pos++]].id);
  }
  return out;
}

ControlSchedule make_gridsearch_schedule(double sbar1, double sbar2, int R) {
  if (R < 2) throw ConfigError("grid-search schedule needs R >= 2");
  std::vector<ControlTriple> rounds(R - 1);
  rounds[0].s = sbar1;
  if (R > 2) rounds[1].s = sbar2;
  return ControlSchedule::make_uniform(std::move(rounds));
}

ControlTable::ControlTable(int rounds, int buses)
    : rounds_(rounds), buses_(buses),
      triples_(static_cast<std::size_t>(rounds) * buses) {}

ControlTable expand(const ControlSchedule& schedule, const Grid& grid) {
  ControlTable table(schedule.rounds, grid.bus_count());
  std::vector<int> segment_of(grid.bus_count(), -1);
  for (std::size_t k = 0; k < schedule.segments.size(); ++k)
    for (int id : schedule.segments[k]) segment_of[grid.bus_index(id)] = static_cast<int>(k);

  for (int v : grid.demand_buses()) {
    const int id = grid.buses()[v].id;
    for (int r = 1; r <= schedule.rounds; ++r) {
      auto t = schedule.lookup(r, id, segment_of[v]);
      if (!t)
        throw ConfigError("control schedule does not cover demand bus " +
                          std::to_string(id) + " in round " + std::to_string(r));
      table.at(r, v) = *t;
    }
  }
  return table;
}

void write_schedule(const ControlSchedule& schedule, std::ostream& out) {
  out << "round,scope,c,b,s\n";
  auto row = [&](int r, const std::string& scope, const ControlTriple& t) {
    out << r << ',' << scope << ',' << format_double(t.c) << ',' << format_double(t.b)
        << ',' << format_double(t.s) << '\n';
  };
  for (int r = 1; r <= schedule.rounds; ++r) {
    if (static_cast<std::size_t>(r - 1) < schedule.uniform.size() && schedule.uniform[r - 1])
      row(r, "*", *schedule.uniform[r - 1]);
    if (static_cast<std::size_t>(r - 1) < schedule.by_segment.size()) {
      const auto& segs = schedule.by_segment[r - 1];
      for (std::size_t k = 0; k < segs.size(); ++k)
        if (segs[k]) row(r, "seg:" + std::to_string(k + 1), *segs[k]);
    }
    for (auto it = schedule.by_bus.lower_bound({r, INT32_MIN});
         it != schedule.by_bus.end() && it->first.first == r; ++it)
      row(r, "bus:" + std::to_string(it->first.second), it->second);
  }
}

void write_schedule(const ControlSchedule& schedule, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_schedule(schedule, out);
}

namespace {

double parse_number(const std::string& text, const std::string& where) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError(where + ": bad number '" + text + "'");
  return v;
}

int parse_int(const std::string& text, const std::string& where) {
  int v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError(where + ": bad integer '" + text + "'");
  return v;
}

}  // namespace

ControlSchedule read_schedule(const std::filesystem::path& path,
                              std::vector<std::vector<int>> segments) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schedule file " + path.string());
  ControlSchedule s;
  std::string line;
  int lineno = 0;
  bool header = false;
  int max_seg = 0;
  struct Entry { int round; std::string scope; ControlTriple t; std::string where; };
  std::vector<Entry> entries;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    if (!header) {
      if (line != "round,scope,c,b,s") throw ConfigError(where + ": expected header round,scope,c,b,s");
      header = true;
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (cols.size() != 5) throw ConfigError(where + ": expected 5 columns");
    Entry e{parse_int(cols[0], where), cols[1],
            {parse_number(cols[2], where), parse_number(cols[3], where), parse_number(cols[4], where)},
            where};
    if (e.round < 1) throw ConfigError(where + ": round must be >= 1");
    s.rounds = std::max(s.rounds, e.round);
    if (e.scope.rfind("seg:", 0) == 0) max_seg = std::max(max_seg, parse_int(e.scope.substr(4), where));
    entries.push_back(std::move(e));
  }
  if (!header) throw ConfigError(path.string() + ": empty schedule file");

  s.uniform.assign(s.rounds, std::nullopt);
  if (max_seg > 0) {
    if (!segments.empty() && static_cast<int>(segments.size()) < max_seg)
      throw ConfigError(path.string() + ": schedule names segment " + std::to_string(max_seg) +
                        " but only " + std::to_string(segments.size()) + " are defined");
    s.by_segment.assign(s.rounds, std::vector<std::optional<ControlTriple>>(
                                      std::max<std::size_t>(max_seg, segments.size())));
  }
  s.segments = std::move(segments);
  for (const auto& e : entries) {
    if (e.scope == "*") {
      s.uniform[e.round - 1] = e.t;
    } else if (e.scope.rfind("seg:", 0) == 0) {
      const int k = parse_int(e.scope.substr(4), e.where);
      if (k < 1) throw ConfigError(e.where + ": segments are numbered from 1");
      s.by_segment[e.round - 1][k - 1] = e.t;
    } else if (e.scope.rfind("bus:", 0) == 0) {
      s.by_bus[{e.round, parse_int(e.scope.substr(4), e.where)}] = e.t;
    } else {
      throw ConfigError(e.where + ": unknown scope '" + e.scope + "'");
    }
  }
  return s;
}

}  // namespace casc
