#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "casc/cascade.hpp"
#include "casc/contingency.hpp"
#include "casc/optimizer.hpp"

namespace casc {

enum class ControlSource { None, File, GridSearch, Segmented, ScalingDp };

// Flat `key = value` run description. Relative paths are resolved against the
// directory of the config file.
struct RunConfig {
  std::filesystem::path buses;
  std::filesystem::path lines;
  bool repair = true;
  bool scale_reactances = true;
  CascadeConfig cascade;
  ContingencySpec contingency{0};  // K = 0: no contingency
  ControlSource control = ControlSource::None;
  std::filesystem::path control_file;
  int segments = 50;
  Objective objective;
  std::uint64_t seed = 0;
  int workers = 1;
  double dp_t = 1.0;
  SearchOptions search;

  RunConfig();
};

/// Applies one setting. Throws ConfigError naming the key on unknown keys or
/// malformed values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value,
                   const std::filesystem::path& base_dir = {});

RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Checks the invariants: case files exist, rounds >= 1, workers >= 1, the
/// outage rule is valid for the horizon, a control file exists when used.
void validate(const RunConfig& config);

/// Loads, repairs and rescales the case, solves the base flows, applies the
/// contingency if one is configured and packages the cascade instance.
Scenario build_scenario(const RunConfig& config, ContingencyResult* contingency = nullptr);

/// Base-case flows of a grid whose islands are balanced.
std::vector<double> base_flows(const Grid& grid);

}  // namespace casc
