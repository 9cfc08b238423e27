#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <unordered_map>
#include <variant>
#include <vector>

#include "orgsim/robot_model.hpp"

namespace orgsim {

using OrganismId = std::uint32_t;

/// A docked port pair, stored with `a < b`.
struct DockEdge {
  PortRef a;
  PortRef b;

  static DockEdge make(PortRef x, PortRef y) { return x < y ? DockEdge{x, y} : DockEdge{y, x}; }
  ModuleId other(ModuleId m) const { return a.module == m ? b.module : a.module; }
  auto operator<=>(const DockEdge&) const = default;
};

struct Organism {
  OrganismId id = 0;
  std::set<ModuleId> nodes;
  std::set<DockEdge> edges;

  /// Docked neighbours of `m` inside this organism, ascending.
  std::vector<ModuleId> neighbours(ModuleId m) const;
};

struct TopologyEvent {
  enum class Kind { Formed, Grown, Linked, Merged, Unlinked, Split, Dissolved };
  Kind kind;
  OrganismId id;
  std::optional<OrganismId> other;  // absorbed (Merged) or spawned (Split) organism
  std::vector<ModuleId> nodes;      // node set of `id` after the event
};
std::string_view to_string(TopologyEvent::Kind k);

/// All organisms of a run. Invariant: each organism's edge set connects its
/// node set, and singleton modules belong to none.
class OrganismSet {
 public:
  /// Both ports must be Docked and mutually peered.
  std::vector<TopologyEvent> register_edge(const DockPort& a, const DockPort& b);
  std::vector<TopologyEvent> remove_edge(const DockEdge& edge);

  std::optional<OrganismId> organism_of(ModuleId m) const;
  const Organism* find(OrganismId id) const;
  const Organism* organism_containing(ModuleId m) const;
  const std::map<OrganismId, Organism>& all() const { return organisms_; }
  bool has_edge(const DockEdge& e) const;

 private:
  OrganismId fresh_id() { return next_id_++; }

  std::map<OrganismId, Organism> organisms_;
  std::unordered_map<ModuleId, OrganismId> membership_;
  OrganismId next_id_ = 1;
};

/// Mass-weighted mean of the given positions.
Vec2 center_of_mass(const Eigen::Matrix2Xd& positions, const Eigen::VectorXd& masses);
Vec2 center_of_mass(std::span<const ModuleId> members, const Fleet& fleet);
Vec2 center_of_mass(const Organism& org, const Fleet& fleet);

/// A pivot joint lifting `chain` (ordered outward from the pivot) horizontally.
struct LiftQuery {
  ModuleId pivot = 0;
  int dof = 0;
  std::vector<ModuleId> chain;
};

/// Worst-case holding torque: sum of m_i * g * arm_i, arm_i the cumulative
/// edge length out to module i.
double required_lift_torque(std::span<const ModuleId> chain, const Fleet& fleet);

bool lift_feasible(const LiftQuery& query, const Fleet& fleet);
/// As above, additionally checking that pivot + chain is a docked path.
bool lift_feasible(const LiftQuery& query, const Fleet& fleet, const OrganismSet& organisms);

/// Height of a designated vertical stack: the full stack if the base can
/// erect it, otherwise the base module alone.
double reach_height(const LiftQuery& stack, const Fleet& fleet);
/// Tallest stack any operational member can erect along a docked path.
double reach_height(const Organism& org, const Fleet& fleet);

/// Modules hanging beyond `face` of `m` (BFS order) with their depth from `m`.
std::vector<std::pair<ModuleId, int>> subtree_beyond(const Organism& org, const Fleet& fleet, ModuleId m, Face face);
/// Holding torque a bending joint of `m` needs to lift everything beyond its front face.
double front_lift_torque(const Organism& org, const Fleet& fleet, ModuleId m);

struct OrganismTranslate {
  double forward = 0;  // fraction of organism speed, leader frame
  double lateral = 0;
};
struct OrganismTurn {
  double rate = 0;  // fraction of organism turn rate, ccw
};
using OrganismDriveCommand = std::variant<OrganismTranslate, OrganismTurn>;

struct OrganismMoveResult {
  std::vector<std::pair<ModuleId, Pose>> poses;
  /// Share of transported mass*distance (kg*m) billed to each ground-contact member.
  std::vector<std::pair<ModuleId, double>> mass_distance;
  double energy_cost = 0;
  bool blocked = false;
  bool hits_obstacle = false;
};

/// Operational, non-carried members.
std::vector<ModuleId> ground_contact(const Organism& org, const Fleet& fleet);
/// At least two ground-contact Scouts and every other member carried.
bool is_scout_carry(const Organism& org, const Fleet& fleet);
/// Lowest operational member id, if any.
std::optional<ModuleId> leader_of(const Organism& org, const Fleet& fleet);

/// Rigid organism motion. Throws InvalidCommandError for a sideways command
/// that some ground-contact drive cannot follow.
OrganismMoveResult organism_move(const Organism& org, const Fleet& fleet, const OrganismDriveCommand& cmd,
                                 const TerrainLookup& terrain, double dt, const Tariff& tariff = {});

}  // namespace orgsim
