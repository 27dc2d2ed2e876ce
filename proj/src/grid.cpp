#include "casc/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "casc/errors.hpp"
#include "casc/powerflow.hpp"

namespace casc {
namespace {

constexpr double kBalanceTolerance = 1e-6;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

struct CsvReader {
  std::filesystem::path path;
  std::ifstream in;
  int line_no = 0;

  explicit CsvReader(const std::filesystem::path& p) : path(p), in(p) {
    if (!in) throw CaseError(path.string() + ": cannot open file");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw CaseError(path.filename().string() + ":" + std::to_string(line_no) +
                    ": " + what);
  }

  // Next data row, skipping blanks and comments. Returns false at EOF.
  bool next(std::string& buffer, std::vector<std::string_view>& fields) {
    while (std::getline(in, buffer)) {
      ++line_no;
      auto view = trim(buffer);
      if (view.empty() || view.front() == '#') continue;
      fields = split_csv(view);
      return true;
    }
    return false;
  }

  void expect_header(const std::vector<std::string_view>& want) {
    std::string buffer;
    std::vector<std::string_view> fields;
    if (!next(buffer, fields)) fail("missing header");
    if (fields != want) {
      std::string joined;
      for (auto f : want) joined += (joined.empty() ? "" : ",") + std::string(f);
      fail("expected header '" + joined + "'");
    }
  }

  double number(std::string_view field, const char* name) const {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(value))
      fail(std::string("parse error in field '") + name + "': '" +
           std::string(field) + "'");
    return value;
  }

  int integer(std::string_view field, const char* name) const {
    int value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size())
      fail(std::string("parse error in field '") + name + "': '" +
           std::string(field) + "'");
    return value;
  }
};

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

Grid::Grid(std::vector<Bus> buses, std::vector<Line> lines)
    : buses_(std::move(buses)), lines_(std::move(lines)) {
  std::sort(buses_.begin(), buses_.end(),
            [](const Bus& a, const Bus& b) { return a.id < b.id; });
  std::sort(lines_.begin(), lines_.end(),
            [](const Line& a, const Line& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < buses_.size(); ++i)
    if (buses_[i].id == buses_[i - 1].id)
      throw CaseError("duplicate bus id " + std::to_string(buses_[i].id));
  for (std::size_t j = 1; j < lines_.size(); ++j)
    if (lines_[j].id == lines_[j - 1].id)
      throw CaseError("duplicate line id " + std::to_string(lines_[j].id));

  double sum = 0.0, sum_abs = 0.0;
  for (const auto& b : buses_) {
    if (!std::isfinite(b.beta) || !std::isfinite(b.max_supply))
      throw CaseError("non-finite data at bus " + std::to_string(b.id));
    if (b.max_supply < 0.0)
      throw CaseError("negative max_supply at bus " + std::to_string(b.id));
    if (b.beta > 0.0 && b.max_supply < b.beta)
      throw CaseError("max_supply below beta at generator bus " + std::to_string(b.id));
    sum += b.beta;
    sum_abs += std::abs(b.beta);
  }
  if (std::abs(sum) > kBalanceTolerance * sum_abs)
    throw CaseError("supply-demand imbalance " + format_double(sum) +
                    " exceeds tolerance");

  tail_.resize(lines_.size());
  head_.resize(lines_.size());
  adj_start_.assign(buses_.size() + 1, 0);
  for (std::size_t j = 0; j < lines_.size(); ++j) {
    const auto& l = lines_[j];
    if (l.tail == l.head)
      throw CaseError("line " + std::to_string(l.id) + " is a self-loop");
    if (!std::isfinite(l.reactance) || !std::isfinite(l.flow_limit) || l.flow_limit < 0.0)
      throw CaseError("bad parameters on line " + std::to_string(l.id));
    auto find = [&](int id) {
      auto it = std::lower_bound(buses_.begin(), buses_.end(), id,
                                 [](const Bus& b, int v) { return b.id < v; });
      if (it == buses_.end() || it->id != id)
        throw CaseError("dangling reference: line " + std::to_string(l.id) +
                        " references unknown bus " + std::to_string(id));
      return static_cast<int>(it - buses_.begin());
    };
    tail_[j] = find(l.tail);
    head_[j] = find(l.head);
    ++adj_start_[tail_[j] + 1];
    ++adj_start_[head_[j] + 1];
  }
  std::partial_sum(adj_start_.begin(), adj_start_.end(), adj_start_.begin());
  adj_lines_.resize(2 * lines_.size());
  std::vector<int> fill(adj_start_.begin(), adj_start_.end() - 1);
  for (std::size_t j = 0; j < lines_.size(); ++j) {
    adj_lines_[fill[tail_[j]]++] = static_cast<int>(j);
    adj_lines_[fill[head_[j]]++] = static_cast<int>(j);
  }
}

int Grid::bus_index(int id) const {
  auto it = std::lower_bound(buses_.begin(), buses_.end(), id,
                             [](const Bus& b, int v) { return b.id < v; });
  if (it == buses_.end() || it->id != id)
    throw CaseError("unknown bus id " + std::to_string(id));
  return static_cast<int>(it - buses_.begin());
}

int Grid::line_index(int id) const {
  auto it = std::lower_bound(lines_.begin(), lines_.end(), id,
                             [](const Line& l, int v) { return l.id < v; });
  if (it == lines_.end() || it->id != id)
    throw CaseError("unknown line id " + std::to_string(id));
  return static_cast<int>(it - lines_.begin());
}

std::vector<double> Grid::injections() const {
  std::vector<double> out(buses_.size());
  for (std::size_t i = 0; i < buses_.size(); ++i) out[i] = buses_[i].beta;
  return out;
}

std::vector<double> Grid::reactances() const {
  std::vector<double> out(lines_.size());
  for (std::size_t j = 0; j < lines_.size(); ++j) out[j] = lines_[j].reactance;
  return out;
}

std::vector<double> Grid::flow_limits() const {
  std::vector<double> out(lines_.size());
  for (std::size_t j = 0; j < lines_.size(); ++j) out[j] = lines_[j].flow_limit;
  return out;
}

std::vector<int> Grid::generator_buses() const {
  std::vector<int> out;
  for (int i = 0; i < bus_count(); ++i)
    if (buses_[i].beta > 0.0) out.push_back(i);
  return out;
}

std::vector<int> Grid::demand_buses() const {
  std::vector<int> out;
  for (int i = 0; i < bus_count(); ++i)
    if (buses_[i].beta < 0.0) out.push_back(i);
  return out;
}

double Grid::total_demand() const {
  double d = 0.0;
  for (const auto& b : buses_)
    if (b.beta < 0.0) d -= b.beta;
  return d;
}

Grid Grid::with_lines(std::vector<Line> lines) const {
  return Grid(buses_, std::move(lines));
}

Grid Grid::with_injections(std::span<const double> beta) const {
  auto buses = buses_;
  for (std::size_t i = 0; i < buses.size(); ++i) {
    buses[i].beta = beta[i];
    if (beta[i] > buses[i].max_supply) buses[i].max_supply = beta[i];
  }
  return Grid(std::move(buses), lines_);
}

IslandPartition islands(const Grid& grid) {
  std::vector<char> active(grid.line_count(), 1);
  auto beta = grid.injections();
  return islands(grid, active, beta);
}

IslandPartition islands(const Grid& grid, std::span<const char> active,
                        std::span<const double> beta) {
  const int n = grid.bus_count();
  IslandPartition part;
  part.island_of_bus.assign(n, -1);
  std::vector<int> stack;
  for (int root = 0; root < n; ++root) {
    if (part.island_of_bus[root] >= 0) continue;
    const int id = part.count();
    Island island;
    part.island_of_bus[root] = id;
    stack.push_back(root);
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      island.buses.push_back(v);
      for (int j : grid.incident(v)) {
        if (!active[j]) continue;
        int w = grid.tail(j) == v ? grid.head(j) : grid.tail(j);
        // Each active line is recorded once, from its tail.
        if (grid.tail(j) == v) island.lines.push_back(j);
        if (part.island_of_bus[w] < 0) {
          part.island_of_bus[w] = id;
          stack.push_back(w);
        }
      }
    }
    std::sort(island.buses.begin(), island.buses.end());
    std::sort(island.lines.begin(), island.lines.end());
    for (int v : island.buses) {
      if (beta[v] > 0.0) island.supply += beta[v];
      else island.demand -= beta[v];
    }
    part.islands.push_back(std::move(island));
  }
  return part;
}

Grid load_case(const std::filesystem::path& bus_file,
               const std::filesystem::path& line_file) {
  std::string buffer;
  std::vector<std::string_view> fields;

  std::vector<Bus> buses;
  {
    CsvReader reader(bus_file);
    reader.expect_header({"bus_id", "beta", "max_supply"});
    while (reader.next(buffer, fields)) {
      if (fields.size() != 3) reader.fail("expected 3 fields");
      buses.push_back({reader.integer(fields[0], "bus_id"),
                       reader.number(fields[1], "beta"),
                       reader.number(fields[2], "max_supply")});
    }
  }
  std::vector<Line> lines;
  {
    CsvReader reader(line_file);
    reader.expect_header({"line_id", "tail", "head", "reactance", "flow_limit"});
    while (reader.next(buffer, fields)) {
      if (fields.size() != 5) reader.fail("expected 5 fields");
      lines.push_back({reader.integer(fields[0], "line_id"),
                       reader.integer(fields[1], "tail"),
                       reader.integer(fields[2], "head"),
                       reader.number(fields[3], "reactance"),
                       reader.number(fields[4], "flow_limit")});
    }
  }
  return Grid(std::move(buses), std::move(lines));
}

void write_case(const Grid& grid, const std::filesystem::path& bus_file,
                const std::filesystem::path& line_file) {
  {
    std::ofstream out(bus_file);
    if (!out) throw CaseError(bus_file.string() + ": cannot open for writing");
    out << "bus_id,beta,max_supply\n";
    for (const auto& b : grid.buses())
      out << b.id << ',' << format_double(b.beta) << ','
          << format_double(b.max_supply) << '\n';
  }
  std::ofstream out(line_file);
  if (!out) throw CaseError(line_file.string() + ": cannot open for writing");
  out << "line_id,tail,head,reactance,flow_limit\n";
  for (const auto& l : grid.lines())
    out << l.id << ',' << l.tail << ',' << l.head << ','
        << format_double(l.reactance) << ',' << format_double(l.flow_limit) << '\n';
}

Grid repair_data(const Grid& grid, std::span<const double> f0,
                 const RepairOptions& options) {
  std::vector<Line> lines(grid.lines().begin(), grid.lines().end());
  for (std::size_t j = 0; j < lines.size(); ++j) {
    auto& l = lines[j];
    const double flow = std::abs(f0[j]);
    if (l.flow_limit == 0.0) {
      l.flow_limit = flow >= options.zero_flow ? (1.0 + options.gamma) * flow
                                               : options.limit_floor;
    } else if (flow >= options.near_limit * l.flow_limit) {
      // Lines sitting at (or above) their limit in the base case. Raising to
      // max(raise*u, raise*|f0|) keeps the rule a fixed point.
      l.flow_limit = options.raise * std::max(l.flow_limit, flow);
    }
    l.reactance = std::abs(l.reactance);
  }
  return grid.with_lines(std::move(lines));
}

Grid repair_case(const Grid& grid, const RepairOptions& options) {
  std::vector<Line> lines(grid.lines().begin(), grid.lines().end());
  for (auto& l : lines) l.reactance = std::abs(l.reactance);
  Grid positive = grid.with_lines(std::move(lines));
  auto base = solve_grid(positive, positive.injections());
  return repair_data(positive, base.flows, options);
}

}  // namespace casc
