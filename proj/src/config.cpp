#include "casc/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "casc/errors.hpp"
#include "casc/powerflow.hpp"

namespace casc {
namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& value) {
  throw ConfigError("bad value for '" + key + "': '" + value + "'");
}

double to_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end) bad(key, value);
  return v;
}

long long to_int(const std::string& key, const std::string& value) {
  long long v = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end) bad(key, value);
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad(key, value);
}

std::vector<double> to_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) bad(key, value);
  return out;
}

// "0.1", "constant:0.1", "step:e0,a", "linear:e0,b", "table:e1,e2,..."
EpsilonSchedule to_epsilon(const std::string& key, const std::string& value) {
  const auto colon = value.find(':');
  if (colon == std::string::npos) return EpsilonSchedule::constant(to_double(key, value));
  const std::string kind = value.substr(0, colon);
  const auto args = to_list(key, value.substr(colon + 1));
  if (kind == "constant" && args.size() == 1) return EpsilonSchedule::constant(args[0]);
  if (kind == "step" && args.size() == 2) return EpsilonSchedule::step(args[0], args[1]);
  if (kind == "linear" && args.size() == 2) return EpsilonSchedule::linear(args[0], args[1]);
  if (kind == "table") {
    EpsilonSchedule e;
    e.kind = EpsilonSchedule::Kind::Table;
    e.table = args;
    return e;
  }
  bad(key, value);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  return p.is_relative() && !base.empty() ? base / p : p;
}

}  // namespace

RunConfig::RunConfig() { cascade.rounds = 8; }

void apply_setting(RunConfig& c, const std::string& key, const std::string& value,
                   const std::filesystem::path& base) {
  static const std::map<std::string, std::function<void(RunConfig&, const std::string&,
                                                         const std::string&,
                                                         const std::filesystem::path&)>>
      table = {
          {"case",
           [](RunConfig& c, const auto&, const auto& v, const auto& b) {
             const auto dir = resolve(b, v);
             c.buses = dir / "buses.csv";
             c.lines = dir / "lines.csv";
           }},
          {"buses", [](RunConfig& c, const auto&, const auto& v, const auto& b) { c.buses = resolve(b, v); }},
          {"lines", [](RunConfig& c, const auto&, const auto& v, const auto& b) { c.lines = resolve(b, v); }},
          {"repair", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.repair = to_bool(k, v); }},
          {"scale_reactances",
           [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.scale_reactances = to_bool(k, v); }},
          {"rounds",
           [](RunConfig& c, const auto& k, const auto& v, const auto&) {
             c.cascade.rounds = static_cast<int>(to_int(k, v));
           }},
          {"alpha", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.cascade.alpha = to_double(k, v); }},
          {"memory",
           [](RunConfig& c, const auto& k, const auto& v, const auto&) {
             if (v == "ewma") c.cascade.memory = MemoryVariant::Ewma;
             else if (v == "two_point") c.cascade.memory = MemoryVariant::TwoPoint;
             else bad(k, v);
           }},
          {"outage",
           [](RunConfig& c, const auto& k, const auto& v, const auto&) {
             if (v == "deterministic") c.cascade.outage.kind = OutageKind::Deterministic;
             else if (v == "banded") c.cascade.outage.kind = OutageKind::Banded;
             else if (v == "smoothed") c.cascade.outage.kind = OutageKind::Smoothed;
             else bad(k, v);
           }},
          {"strict",
           [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.cascade.outage.strict = to_bool(k, v); }},
          {"epsilon",
           [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.cascade.outage.epsilon = to_epsilon(k, v); }},
          {"smoothing_m",
           [](RunConfig& c, const auto& k, const auto& v, const auto&) {
             c.cascade.outage.smoothing_m = to_double(k, v);
           }},
          {"observation",
           [](RunConfig& c, const auto& k, const auto& v, const auto&) {
             if (v == "memory") c.cascade.observation = Observation::MemoryWeighted;
             else if (v == "raw") c.cascade.observation = Observation::Raw;
             else if (v == "variability") c.cascade.observation = Observation::Variability;
             else bad(k, v);
           }},
          {"contingency_k",
           [](RunConfig& c, const auto& k, const auto& v, const auto&) {
             const auto K = to_int(k, v);
             if (K < 0) bad(k, v);
             c.contingency.K = static_cast<int>(K);
           }},
          {"contingency_pi",
           [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.contingency.pi = to_double(k, v); }},
          {"contingency_seed",
           [](RunConfig& c, const auto& k, const auto& v, const auto&) {
             c.contingency.seed = static_cast<std::uint64_t>(to_int(k, v));
           }},
          {"tree",
           [](RunConfig& c, const auto& k, const auto& v, const auto&) {
             if (v == "maxflow") c.contingency.tree = TreeRule::MaxFlow;
             else if (v == "bfs") c.contingency.tree = TreeRule::Bfs;
             else bad(k, v);
           }},
          {"control",
           [](RunConfig& c, const auto& k, const auto& v, const auto&) {
             if (v == "none") c.control = ControlSource::None;
             else if (v == "file") c.control = ControlSource::File;
             else if (v == "gridsearch") c.control = ControlSource::GridSearch;
             else if (v == "segmented") c.control = ControlSource::Segmented;
             else if (v == "scaling-dp") c.control = ControlSource::ScalingDp;
             else bad(k, v);
           }},
          {"control_file",
           [](RunConfig& c, const auto&, const auto& v, const auto& b) { c.control_file = resolve(b, v); }},
          {"segments",
           [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.segments = static_cast<int>(to_int(k, v)); }},
          {"objective",
           [](RunConfig& c, const auto& k, const auto& v, const auto&) {
             if (v == "deterministic") c.objective.kind = ObjectiveKind::DeterministicYield;
             else if (v == "mean") c.objective.kind = ObjectiveKind::Mean;
             else if (v == "mean_variance") c.objective.kind = ObjectiveKind::MeanMinusVariance;
             else if (v == "sharpe") c.objective.kind = ObjectiveKind::Sharpe;
             else bad(k, v);
           }},
          {"samples",
           [](RunConfig& c, const auto& k, const auto& v, const auto&) {
             c.objective.samples = static_cast<int>(to_int(k, v));
           }},
          {"lambda",
           [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.objective.lambda = to_double(k, v); }},
          {"seed",
           [](RunConfig& c, const auto& k, const auto& v, const auto&) {
             c.seed = static_cast<std::uint64_t>(to_int(k, v));
             c.objective.seed = c.seed;
           }},
          {"workers",
           [](RunConfig& c, const auto& k, const auto& v, const auto&) {
             c.workers = static_cast<int>(to_int(k, v));
             c.search.workers = c.workers;
           }},
          {"dp_t", [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.dp_t = to_double(k, v); }},
          {"max_iterations",
           [](RunConfig& c, const auto& k, const auto& v, const auto&) {
             c.search.max_iterations = static_cast<int>(to_int(k, v));
           }},
          {"fd_step",
           [](RunConfig& c, const auto& k, const auto& v, const auto&) { c.search.fd_step = to_double(k, v); }},
      };
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown key '" + key + "'");
  it->second(c, key, value, base);
}

RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  RunConfig c;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(number) + ": expected key = value");
    apply_setting(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), base_dir);
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in, path.parent_path());
}

void validate(const RunConfig& c) {
  if (c.buses.empty() || c.lines.empty()) throw ConfigError("'case' (or 'buses' and 'lines') is required");
  if (!std::filesystem::exists(c.buses)) throw ConfigError("'buses': no such file " + c.buses.string());
  if (!std::filesystem::exists(c.lines)) throw ConfigError("'lines': no such file " + c.lines.string());
  if (c.cascade.rounds < 1) throw ConfigError("'rounds' must be >= 1");
  if (c.workers < 1) throw ConfigError("'workers' must be >= 1");
  if (c.objective.samples < 1) throw ConfigError("'samples' must be >= 1");
  if (c.segments < 1) throw ConfigError("'segments' must be >= 1");
  if (c.cascade.alpha < 0.0 || c.cascade.alpha > 1.0) throw ConfigError("'alpha' must lie in [0, 1]");
  if (c.contingency.K > 0 && !(c.contingency.pi > 0.0 && c.contingency.pi < 1.0))
    throw ConfigError("'contingency_pi' must lie in (0, 1)");
  if (c.control == ControlSource::File) {
    if (c.control_file.empty()) throw ConfigError("'control_file' is required with control = file");
    if (!std::filesystem::exists(c.control_file))
      throw ConfigError("'control_file': no such file " + c.control_file.string());
  }
  try {
    c.cascade.outage.validate(c.cascade.rounds);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("'epsilon': ") + e.what());
  }
}

std::vector<double> base_flows(const Grid& grid) {
  return solve_grid(grid, grid.injections()).flows;
}

Scenario build_scenario(const RunConfig& config, ContingencyResult* contingency) {
  Grid grid = load_case(config.buses, config.lines);
  if (config.repair) grid = repair_case(grid);
  if (config.scale_reactances && grid.line_count() > 0) grid = scale_reactances(grid, 100.0);
  const auto f0 = base_flows(grid);

  Scenario s;
  s.cascade = config.cascade;
  if (config.contingency.K > 0) {
    auto result = generate_contingency(grid, f0, config.contingency);
    s.grid = apply_contingency(grid, result.line_ids);
    s.initial_flows = restrict_to_lines(grid, s.grid, f0);
    if (contingency) *contingency = std::move(result);
  } else {
    s.grid = grid;
    s.initial_flows = f0;
  }
  return s;
}

}  // namespace casc
