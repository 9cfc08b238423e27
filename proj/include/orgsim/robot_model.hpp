#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "orgsim/geometry.hpp"
#include "orgsim/ports.hpp"
#include "orgsim/tariff.hpp"

namespace orgsim {

enum class ModuleClass : std::uint8_t { Scout, Backbone, ActiveWheel };
inline constexpr std::array<ModuleClass, 3> kAllClasses{ModuleClass::Scout, ModuleClass::Backbone,
                                                        ModuleClass::ActiveWheel};

enum class DriveKind : std::uint8_t { TrackedDifferential, ScrewDrive, Omnidirectional };

enum class TerrainClass : std::uint8_t { Plain, Rough, Slope, SmallHole, Obstacle };
inline constexpr std::array<TerrainClass, 5> kAllTerrain{TerrainClass::Plain, TerrainClass::Rough, TerrainClass::Slope,
                                                         TerrainClass::SmallHole, TerrainClass::Obstacle};

enum class Health : std::uint8_t { Ok, EnergyDead, HardwareDead };

/// How the Backbone's single DOF is used in the current docking configuration.
enum class JointMode : std::uint8_t { Bend, Rotate };

std::string_view to_string(ModuleClass c);
std::optional<ModuleClass> class_from_string(std::string_view s);
std::string_view to_string(DriveKind d);
std::string_view to_string(TerrainClass t);
std::string_view to_string(Health h);

/// Immutable capability envelope of a module class.
struct ModuleSpec {
  ModuleClass cls = ModuleClass::Scout;
  double max_speed = 0;        // m/s
  DriveKind drive = DriveKind::TrackedDifferential;
  int dof_count = 0;
  double bend_range = 0;       // deg, symmetric
  std::optional<double> rot_range;  // deg, symmetric; absent on the Backbone
  double max_torque = 0;       // N*m
  double max_joint_speed = 0;  // deg/s
  bool rough_terrain_capable = false;
  double mass = 1.0;                  // kg
  double edge_length = 0.10;          // m
  double battery_capacity = 20000.0;  // J

  bool operator==(const ModuleSpec&) const = default;

  /// Symmetric limit of DOF `dof` in degrees.
  double dof_limit(int dof) const;
  /// Whether DOF `dof` bends (lifts what hangs beyond the front face) or rotates.
  bool dof_bends(int dof, JointMode backbone_mode = JointMode::Bend) const;
  /// Maximum turn rate in deg/s, taken as spinning in place at full drive speed.
  double max_turn_rate() const;
};

/// Overridable (non-Table-I) fields, by name: "mass", "edge_length",
/// "battery_capacity".
using SpecOverrides = std::map<std::string, double>;

ModuleSpec make_module_spec(ModuleClass cls, const SpecOverrides& overrides = {});

bool can_traverse(ModuleClass cls, TerrainClass cell);

struct Pose {
  double x = 0;
  double y = 0;
  double heading = 0;  // deg in [0, 360)

  Vec2 position() const { return {x, y}; }
  bool operator==(const Pose&) const = default;
};

struct ModuleState {
  ModuleId id = 0;
  ModuleClass cls = ModuleClass::Scout;
  Pose pose;
  double battery = 0;  // J in [0, capacity]
  Health health = Health::Ok;
  std::vector<double> joint_angles;
  std::array<DockPort, 4> ports;
  bool coprocessor_on = false;
  JointMode joint_mode = JointMode::Bend;
  bool carried = false;  // rides on other modules; imposes no drive constraint

  bool alive() const { return health == Health::Ok; }
  DockPort& port(Face f) { return ports[static_cast<int>(f)]; }
  const DockPort& port(Face f) const { return ports[static_cast<int>(f)]; }
};

/// Fresh module state: full battery, joints at zero, four Free ports.
ModuleState make_module_state(ModuleId id, const ModuleSpec& spec, Pose pose);

/// All modules of a run, indexed by id (id == position).
struct Fleet {
  std::vector<ModuleSpec> specs;
  std::vector<ModuleState> states;

  std::size_t size() const { return states.size(); }
  ModuleState& state(ModuleId id) { return states.at(id); }
  const ModuleState& state(ModuleId id) const { return states.at(id); }
  const ModuleSpec& spec(ModuleId id) const { return specs.at(id); }
  ModuleId add(const ModuleSpec& spec, Pose pose);
};

/// Read-only terrain access: `at` returns nullopt outside the arena.
struct TerrainLookup {
  std::function<std::optional<TerrainClass>(const Vec2&)> at;
  double resolution = 0.1;  // cell size, m
};

/// A lookup with no obstacles anywhere, for tests and free-space kinematics.
TerrainLookup open_terrain();

/// Velocity command as fractions of the module's envelope, each in [-1, 1]:
/// forward and lateral (body left) of max_speed, angular (ccw) of max_turn_rate.
struct DriveCommand {
  double forward = 0;
  double lateral = 0;
  double angular = 0;
  bool operator==(const DriveCommand&) const = default;
};

struct LocomotionResult {
  Pose pose;            // pose after the step (unchanged if blocked)
  Pose attempted;       // pose the command aimed at
  double distance = 0;  // metres actually travelled
  double energy_cost = 0;
  bool blocked = false;
};

/// Single, undocked module step: translate along the commanded body-frame
/// velocity, then apply the turn.
LocomotionResult locomotion_step(const ModuleState& state, const ModuleSpec& spec, const DriveCommand& cmd,
                                 const TerrainLookup& terrain, double dt, const Tariff& tariff = {});

/// Scan of the straight path from `from` to `to` (start excluded) for a module
/// of class `cls`. Carried modules are stopped only by obstacles.
struct PathCheck {
  bool clear = true;
  bool hits_obstacle = false;  // Obstacle cell or off-arena on the way
};
PathCheck check_path(const TerrainLookup& terrain, const Vec2& from, const Vec2& to, ModuleClass cls,
                     bool carried = false);

struct ActuationResult {
  double angle = 0;        // deg
  double swept = 0;        // |delta| in deg
  double energy_cost = 0;  // J
};

/// Rate-limited, range-clamped joint move. `applied_torque` is the load the
/// joint works against (N*m); the energy charge is actuation * torque * swept rad.
ActuationResult actuate_joint(const ModuleState& state, const ModuleSpec& spec, int dof, double target_deg, double dt,
                              double applied_torque, const Tariff& tariff = {});

/// Torque needed just to swing the module's own half (m*g*edge/2).
double self_weight_torque(const ModuleSpec& spec);

}  // namespace orgsim
