#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "orgsim/control.hpp"

namespace orgsim {

using CellPredicate = std::function<bool(CellIndex)>;

/// A* over the grid from `start` to the nearest cell satisfying `is_goal`
/// (Euclidean heuristic towards `goal_hint`). Returns the cell sequence
/// including both ends, or nullopt when no path exists.
/// 8-connected unless `four_connected`; diagonal moves never cut corners.
std::optional<std::vector<CellIndex>> grid_path(int width, int height, CellIndex start, const CellPredicate& passable,
                                                const CellPredicate& is_goal, CellIndex goal_hint,
                                                bool four_connected = false);

/// Cells a module of class `cls` may plan through: traversable where known,
/// optimistic where never sensed.
CellPredicate known_passable(const ModuleMemory& memory, ModuleClass cls);

/// Cells whose 3x3 neighbourhood is passable for `cls`: room for a module
/// flanked by two others.
CellPredicate footprint_passable(const ModuleMemory& memory, ModuleClass cls);

Vec2 cell_center(CellIndex c, double cell_size);
CellIndex cell_at(const Vec2& p, double cell_size);

/// One-tick command moving a singleton towards `target`, never overshooting.
/// Tracked drives turn on the spot first; the others translate directly.
DriveCommand drive_toward(const Pose& pose, const ModuleSpec& spec, const Vec2& target, double dt);

/// One-tick command turning on the spot to `heading`, never overshooting.
DriveCommand turn_toward(const Pose& pose, const ModuleSpec& spec, double heading, double dt);

/// Follows a cell path, replanning when the goal moves or motion fails.
class PathFollower {
 public:
  void reset() { path_.clear(); next_ = 0; goal_.reset(); }

  /// Command towards `target` (exact final position); nullopt when there is
  /// no known route. `passable` gates the plan.
  std::optional<DriveCommand> step(const Observation& obs, const Vec2& target, const CellPredicate& passable);

  /// Organism-level translation of `anchor_pose` (a carried member) along
  /// `passable` cells, expressed in the leader's body frame at `speed` m/s.
  std::optional<DriveCommand> step_translate(const Observation& obs, const Pose& anchor_pose, const Pose& leader_pose,
                                             double speed, const CellPredicate& passable,
                                             const CellPredicate& is_goal, CellIndex goal_hint);

 private:
  bool plan(const Observation& obs, CellIndex start, const CellPredicate& passable, const CellPredicate& is_goal,
            CellIndex goal_hint, bool four_connected);

  std::vector<CellIndex> path_;
  std::size_t next_ = 0;
  std::optional<CellIndex> goal_;
  std::uint64_t planned_at_ = 0;
};

}  // namespace orgsim
