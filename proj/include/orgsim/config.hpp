#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "orgsim/robot_model.hpp"
#include "orgsim/tariff.hpp"
#include "orgsim/world.hpp"

namespace orgsim {

struct SpawnSpec {
  ModuleClass cls = ModuleClass::Scout;
  Pose pose;
  double battery_fraction = 1.0;
  Health health = Health::Ok;
};

struct SensingParams {
  double socket_range = 10.0;   // m, line of sight
  double module_range = 3.0;    // m, line of sight
  double terrain_radius = 1.0;  // m
  double radio_range = 5.0;     // m
  std::uint32_t bus_capacity = 64;
};

struct ScenarioConfig {
  std::string source;    // config file path, empty when parsed from text
  std::string map_path;  // as resolved
  Arena arena;
  bool allow_any_socket_height = false;

  std::vector<SpawnSpec> spawns;                  // explicit poses, ids 0..
  std::map<ModuleClass, std::uint32_t> counts;    // placed by seed after the spawns
  std::map<ModuleClass, SpecOverrides> overrides;

  Tariff tariff;
  ScheduleParams schedule;  // seed is derived from `seed` at run time
  double hazard_rate = 0.0; // hardware failures per module per day
  double share_rate = 5.0;  // W per docked edge
  double dt = 1.0;
  std::uint32_t ticks_per_day = 8640;
  std::uint32_t days = 3;
  std::uint64_t seed = 1;
  SensingParams sensing;
  std::map<ModuleClass, std::vector<std::string>> controllers;
  std::string out_dir = "out";

  std::uint64_t total_ticks() const { return static_cast<std::uint64_t>(days) * ticks_per_day; }
  std::size_t roster_size() const;
  /// Effective settings as (key, value) pairs in a fixed order.
  std::vector<std::pair<std::string, std::string>> echo() const;
};

/// Names a scenario may register besides the built-in controllers.
using ControllerNameCheck = std::function<bool(std::string_view)>;

/// Parse INI text; `base_dir` resolves the map path. Collects every problem
/// and throws ValidationError listing them all.
ScenarioConfig parse_config(const std::string& text, const std::string& base_dir,
                            const ControllerNameCheck& extra_controllers = {});
ScenarioConfig load_config(const std::string& path, const ControllerNameCheck& extra_controllers = {});

/// Findings for the file at `path` (empty when valid). Throws Error when the
/// file cannot be read.
std::vector<std::string> validate_config_file(const std::string& path,
                                              const ControllerNameCheck& extra_controllers = {});

std::string format_double(double v);

}  // namespace orgsim
