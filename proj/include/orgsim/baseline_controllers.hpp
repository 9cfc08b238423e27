#pragma once

#include <map>
#include <memory>
#include <string_view>
#include <vector>

#include "orgsim/control.hpp"

namespace orgsim {

/// Names accepted by make_builtin_controller, in the default registration order.
const std::vector<std::string_view>& builtin_controller_names();

/// nullptr for an unknown name.
std::unique_ptr<Controller> make_builtin_controller(std::string_view name);

inline constexpr std::uint64_t kStatusPeriod = 100;  // ticks between status broadcasts
inline constexpr double kHungryFraction = 0.5;
inline constexpr double kFullFraction = 0.95;
inline constexpr double kCriticalFraction = 0.2;

/// Goals for every module the gossip knows about. A pure function of the
/// gossip table, so every module that heard the same broadcasts computes the
/// same plan.
std::map<ModuleId, GoalRecord> plan_goals(const std::map<ModuleId, GossipEntry>& gossip, std::uint64_t now,
                                          double edge_length);

/// Chain length needed to reach a socket at `height`.
int crew_length(double height, double edge_length);

/// Pose of chain slot `slot` in front of `socket`, North face towards the wall.
Pose crew_slot_pose(const SensedSocket& socket, int slot, double edge_length);

/// Pose beside a dead module for towing: side 0 on its West face, 1 on its East.
Pose tow_slot_pose(const Pose& dead, int side, double edge_length);

}  // namespace orgsim
