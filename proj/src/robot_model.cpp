#include "orgsim/robot_model.hpp"

#include <algorithm>
#include <cmath>

#include "orgsim/error.hpp"

namespace orgsim {

std::string_view to_string(ModuleClass c) {
  switch (c) {
    case ModuleClass::Scout: return "scout";
    case ModuleClass::Backbone: return "backbone";
    case ModuleClass::ActiveWheel: return "active_wheel";
  }
  return "?";
}

std::optional<ModuleClass> class_from_string(std::string_view s) {
  for (auto c : kAllClasses)
    if (to_string(c) == s) return c;
  return std::nullopt;
}

std::string_view to_string(DriveKind d) {
  switch (d) {
    case DriveKind::TrackedDifferential: return "tracked_differential";
    case DriveKind::ScrewDrive: return "screw_drive";
    case DriveKind::Omnidirectional: return "omnidirectional";
  }
  return "?";
}

std::string_view to_string(TerrainClass t) {
  switch (t) {
    case TerrainClass::Plain: return "plain";
    case TerrainClass::Rough: return "rough";
    case TerrainClass::Slope: return "slope";
    case TerrainClass::SmallHole: return "small_hole";
    case TerrainClass::Obstacle: return "obstacle";
  }
  return "?";
}

std::string_view to_string(Health h) {
  switch (h) {
    case Health::Ok: return "ok";
    case Health::EnergyDead: return "energy_dead";
    case Health::HardwareDead: return "hardware_dead";
  }
  return "?";
}

std::string_view to_string(Face f) {
  switch (f) {
    case Face::North: return "N";
    case Face::East: return "E";
    case Face::South: return "S";
    case Face::West: return "W";
  }
  return "?";
}

std::optional<Face> face_from_string(std::string_view s) {
  for (auto f : kAllFaces)
    if (to_string(f) == s) return f;
  return std::nullopt;
}

std::string_view to_string(DockPhase p) {
  switch (p) {
    case DockPhase::Free: return "free";
    case DockPhase::Approaching: return "approaching";
    case DockPhase::Aligning: return "aligning";
    case DockPhase::Locking: return "locking";
    case DockPhase::Docked: return "docked";
    case DockPhase::Unlocking: return "unlocking";
    case DockPhase::Separating: return "separating";
  }
  return "?";
}

double ModuleSpec::dof_limit(int dof) const {
  if (dof < 0 || dof >= dof_count) throw ArgumentError("dof index " + std::to_string(dof) + " out of range");
  if (dof == 0) return bend_range;
  return rot_range.value_or(bend_range);
}

bool ModuleSpec::dof_bends(int dof, JointMode backbone_mode) const {
  if (dof < 0 || dof >= dof_count) throw ArgumentError("dof index " + std::to_string(dof) + " out of range");
  if (cls == ModuleClass::Backbone) return backbone_mode == JointMode::Bend;
  return dof == 0;
}

double ModuleSpec::max_turn_rate() const { return rad_to_deg(max_speed / (0.5 * edge_length)); }

ModuleSpec make_module_spec(ModuleClass cls, const SpecOverrides& overrides) {
  ModuleSpec s;
  s.cls = cls;
  switch (cls) {
    case ModuleClass::Scout:
      s.max_speed = 0.125;
      s.drive = DriveKind::TrackedDifferential;
      s.dof_count = 2;
      s.bend_range = 90.0;
      s.rot_range = 180.0;
      s.max_torque = 3.0;
      s.max_joint_speed = 37.2;
      s.rough_terrain_capable = true;
      break;
    case ModuleClass::Backbone:
      s.max_speed = 0.06;
      s.drive = DriveKind::ScrewDrive;
      s.dof_count = 1;
      s.bend_range = 90.0;
      s.rot_range = std::nullopt;
      s.max_torque = 7.0;
      s.max_joint_speed = 180.0;
      s.rough_terrain_capable = false;
      break;
    case ModuleClass::ActiveWheel:
      s.max_speed = 0.31;
      s.drive = DriveKind::Omnidirectional;
      s.dof_count = 2;
      s.bend_range = 90.0;
      s.rot_range = 180.0;
      s.max_torque = 5.0;
      s.max_joint_speed = 50.0;
      s.rough_terrain_capable = false;
      break;
  }

  static constexpr std::array<std::string_view, 8> kFixed{"max_speed",    "drive",      "dof_count",
                                                          "bend_range",   "rot_range",  "max_torque",
                                                          "max_joint_speed", "rough_terrain_capable"};
  for (const auto& [key, value] : overrides) {
    if (std::find(kFixed.begin(), kFixed.end(), key) != kFixed.end())
      throw ConfigError(key, "fixed by the module class envelope and cannot be overridden");
    double* field = nullptr;
    if (key == "mass") field = &s.mass;
    else if (key == "edge_length") field = &s.edge_length;
    else if (key == "battery_capacity") field = &s.battery_capacity;
    else throw ConfigError(key, "unknown module spec field");
    if (!std::isfinite(value) || value <= 0.0) throw ConfigError(key, "must be a positive number");
    *field = value;
  }
  return s;
}

bool can_traverse(ModuleClass cls, TerrainClass cell) {
  if (cell == TerrainClass::Obstacle) return false;
  if (cls == ModuleClass::Scout) return true;
  return cell == TerrainClass::Plain;
}

ModuleState make_module_state(ModuleId id, const ModuleSpec& spec, Pose pose) {
  ModuleState m;
  m.id = id;
  m.cls = spec.cls;
  pose.heading = normalize_heading(pose.heading);
  m.pose = pose;
  m.battery = spec.battery_capacity;
  m.joint_angles.assign(static_cast<std::size_t>(spec.dof_count), 0.0);
  for (auto f : kAllFaces) {
    auto& p = m.port(f);
    p.owner = id;
    p.face = f;
  }
  return m;
}

ModuleId Fleet::add(const ModuleSpec& spec, Pose pose) {
  const auto id = static_cast<ModuleId>(states.size());
  specs.push_back(spec);
  states.push_back(make_module_state(id, spec, pose));
  return id;
}

TerrainLookup open_terrain() {
  return {[](const Vec2&) -> std::optional<TerrainClass> { return TerrainClass::Plain; }, 0.1};
}

PathCheck check_path(const TerrainLookup& terrain, const Vec2& from, const Vec2& to, ModuleClass cls, bool carried) {
  PathCheck out;
  const double len = (to - from).norm();
  if (len == 0.0) return out;
  const double step = terrain.resolution * 0.25;
  const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
  for (int i = 1; i <= n; ++i) {
    const Vec2 p = from + (to - from) * (static_cast<double>(i) / n);
    const auto t = terrain.at(p);
    if (!t || *t == TerrainClass::Obstacle) {
      out.clear = false;
      out.hits_obstacle = true;
      return out;
    }
    if (!carried && !can_traverse(cls, *t)) out.clear = false;
  }
  return out;
}

namespace {

bool is_docked(const ModuleState& s) {
  return std::any_of(s.ports.begin(), s.ports.end(), [](const DockPort& p) { return phase_has_peer(p.phase); });
}

}  // namespace

LocomotionResult locomotion_step(const ModuleState& state, const ModuleSpec& spec, const DriveCommand& cmd,
                                 const TerrainLookup& terrain, double dt, const Tariff& tariff) {
  if (!(dt > 0.0)) throw ArgumentError("dt must be positive");
  if (!state.alive()) throw ArgumentError("module " + std::to_string(state.id) + " is not operational");
  if (is_docked(state)) throw ArgumentError("module " + std::to_string(state.id) + " is docked; move the organism");
  if (spec.drive == DriveKind::TrackedDifferential && cmd.lateral != 0.0)
    throw InvalidCommandError("tracked drive cannot move sideways");

  const double fwd = std::clamp(cmd.forward, -1.0, 1.0);
  const double lat = std::clamp(cmd.lateral, -1.0, 1.0);
  const double ang = std::clamp(cmd.angular, -1.0, 1.0);

  Vec2 v_body(fwd * spec.max_speed, lat * spec.max_speed);
  if (const double n = v_body.norm(); n > spec.max_speed) v_body *= spec.max_speed / n;

  const Vec2 start = state.pose.position();
  const Vec2 end = start + body_to_world(state.pose.heading) * v_body * dt;

  LocomotionResult r;
  r.attempted = {end.x(), end.y(), normalize_heading(state.pose.heading + ang * spec.max_turn_rate() * dt)};
  r.pose = state.pose;
  if (check_path(terrain, start, end, spec.cls).clear) {
    r.pose = r.attempted;
    r.distance = (end - start).norm();
  } else {
    r.blocked = true;
  }
  r.energy_cost = tariff.idle * dt + tariff.locomotion * r.distance * spec.mass;
  return r;
}

double self_weight_torque(const ModuleSpec& spec) { return spec.mass * kGravity * 0.5 * spec.edge_length; }

ActuationResult actuate_joint(const ModuleState& state, const ModuleSpec& spec, int dof, double target_deg, double dt,
                              double applied_torque, const Tariff& tariff) {
  if (dof < 0 || dof >= spec.dof_count)
    throw ArgumentError("dof index " + std::to_string(dof) + " out of range for " + std::string(to_string(spec.cls)));
  if (!state.alive()) throw ArgumentError("module " + std::to_string(state.id) + " is not operational");
  if (!(dt > 0.0)) throw ArgumentError("dt must be positive");

  const double limit = spec.dof_limit(dof);
  const double current = state.joint_angles.at(static_cast<std::size_t>(dof));
  const double target = std::clamp(target_deg, -limit, limit);
  const double max_step = spec.max_joint_speed * dt;
  const double delta = std::clamp(target - current, -max_step, max_step);
  ActuationResult r;
  r.angle = std::clamp(current + delta, -limit, limit);
  r.swept = std::abs(r.angle - current);
  r.energy_cost = tariff.actuation * std::max(0.0, applied_torque) * deg_to_rad(r.swept);
  return r;
}

}  // namespace orgsim
