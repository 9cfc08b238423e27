#include "orgsim/navigation.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <tuple>

namespace orgsim {

std::optional<std::vector<CellIndex>> grid_path(int width, int height, CellIndex start, const CellPredicate& passable,
                                                const CellPredicate& is_goal, CellIndex goal_hint,
                                                bool four_connected) {
  if (width <= 0 || height <= 0) return std::nullopt;
  auto inside = [&](CellIndex c) { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; };
  if (!inside(start)) return std::nullopt;
  const auto idx = [&](CellIndex c) { return static_cast<std::size_t>(c.y) * width + c.x; };
  const auto n = static_cast<std::size_t>(width) * height;
  std::vector<double> g(n, INFINITY);
  std::vector<std::int64_t> parent(n, -1);
  std::vector<std::uint8_t> closed(n, 0);
  auto h = [&](CellIndex c) { return std::hypot(c.x - goal_hint.x, c.y - goal_hint.y); };

  using Item = std::tuple<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  g[idx(start)] = 0;
  open.emplace(h(start), idx(start));

  static constexpr int kDx[8] = {1, 0, -1, 0, 1, -1, -1, 1};
  static constexpr int kDy[8] = {0, 1, 0, -1, 1, 1, -1, -1};
  const int dirs = four_connected ? 4 : 8;

  while (!open.empty()) {
    const auto [f, i] = open.top();
    open.pop();
    if (closed[i]) continue;
    closed[i] = 1;
    const CellIndex c{static_cast<int>(i % width), static_cast<int>(i / width)};
    if (is_goal(c)) {
      std::vector<CellIndex> path;
      for (std::int64_t k = static_cast<std::int64_t>(i); k >= 0; k = parent[static_cast<std::size_t>(k)])
        path.push_back({static_cast<int>(k % width), static_cast<int>(k / width)});
      std::reverse(path.begin(), path.end());
      return path;
    }
    for (int d = 0; d < dirs; ++d) {
      const CellIndex nb{c.x + kDx[d], c.y + kDy[d]};
      if (!inside(nb) || closed[idx(nb)] || !passable(nb)) continue;
      if (d >= 4 && (!passable({c.x + kDx[d], c.y}) || !passable({c.x, c.y + kDy[d]}))) continue;
      const double ng = g[i] + (d >= 4 ? std::numbers::sqrt2 : 1.0);
      if (ng < g[idx(nb)]) {
        g[idx(nb)] = ng;
        parent[idx(nb)] = static_cast<std::int64_t>(i);
        open.emplace(ng + h(nb), idx(nb));
      }
    }
  }
  return std::nullopt;
}

CellPredicate known_passable(const ModuleMemory& memory, ModuleClass cls) {
  return [&memory, cls](CellIndex c) {
    if (!memory.in_bounds(c)) return false;
    const auto t = memory.known(c);
    return !t || can_traverse(cls, *t);
  };
}

CellPredicate footprint_passable(const ModuleMemory& memory, ModuleClass cls) {
  auto one = known_passable(memory, cls);
  return [one](CellIndex c) {
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx)
        if (!one({c.x + dx, c.y + dy})) return false;
    return true;
  };
}

Vec2 cell_center(CellIndex c, double cell_size) { return {(c.x + 0.5) * cell_size, (c.y + 0.5) * cell_size}; }

CellIndex cell_at(const Vec2& p, double cell_size) {
  return {static_cast<int>(std::floor(p.x() / cell_size)), static_cast<int>(std::floor(p.y() / cell_size))};
}

DriveCommand turn_toward(const Pose& pose, const ModuleSpec& spec, double heading, double dt) {
  const double err = heading_delta(pose.heading, heading);
  DriveCommand cmd;
  cmd.angular = std::clamp(err / (spec.max_turn_rate() * dt), -1.0, 1.0);
  return cmd;
}

DriveCommand drive_toward(const Pose& pose, const ModuleSpec& spec, const Vec2& target, double dt) {
  const Vec2 d = target - pose.position();
  const double dist = d.norm();
  DriveCommand cmd;
  if (dist < 1e-12) return cmd;
  const double reach = spec.max_speed * dt;
  if (spec.drive == DriveKind::TrackedDifferential) {
    const double err = heading_delta(pose.heading, heading_of(d));
    if (std::abs(err) > 1e-6) return turn_toward(pose, spec, heading_of(d), dt);
    cmd.forward = std::min(1.0, dist / reach);
    return cmd;
  }
  const Vec2 body = body_to_world(pose.heading).transpose() * d;
  const double frac = std::min(1.0, dist / reach);
  cmd.forward = body.x() / dist * frac;
  cmd.lateral = body.y() / dist * frac;
  return cmd;
}

bool PathFollower::plan(const Observation& obs, CellIndex start, const CellPredicate& passable,
                        const CellPredicate& is_goal, CellIndex goal_hint, bool four_connected) {
  path_.clear();
  next_ = 0;
  planned_at_ = obs.tick;
  // The start cell is where we are; never let it block the plan.
  auto pass = [&](CellIndex c) { return c == start || passable(c); };
  auto p = grid_path(obs.arena_width, obs.arena_height, start, pass, is_goal, goal_hint, four_connected);
  if (!p) return false;
  path_ = std::move(*p);
  return true;
}

namespace {

bool motion_failed(const Observation& obs) {
  return obs.last_action == "drive" && (obs.last_outcome == Outcome::Blocked || obs.last_outcome == Outcome::Rejected);
}

}  // namespace

std::optional<DriveCommand> PathFollower::step(const Observation& obs, const Vec2& target,
                                               const CellPredicate& passable) {
  const CellIndex goal = cell_at(target, obs.cell_size);
  const CellIndex here = obs.cell;
  if (here == goal) {
    reset();
    goal_ = goal;
    return drive_toward(obs.pose, obs.spec, target, obs.dt);
  }
  const Vec2 centre = cell_center(here, obs.cell_size);
  if (motion_failed(obs) && (obs.pose.position() - centre).norm() > 1e-9) {
    path_.clear();
    return drive_toward(obs.pose, obs.spec, centre, obs.dt);
  }
  auto position = [&]() -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < path_.size(); ++i)
      if (path_[i] == here) return i;
    return std::nullopt;
  };
  auto at = position();
  if (!goal_ || *goal_ != goal || !at || motion_failed(obs) || obs.tick - planned_at_ > 300) {
    goal_ = goal;
    if (!plan(obs, here, passable, [goal](CellIndex c) { return c == goal; }, goal, false)) return std::nullopt;
    at = 0;
  }
  next_ = *at + 1;
  if (next_ + 1 >= path_.size()) return drive_toward(obs.pose, obs.spec, target, obs.dt);
  return drive_toward(obs.pose, obs.spec, cell_center(path_[next_], obs.cell_size), obs.dt);
}

std::optional<DriveCommand> PathFollower::step_translate(const Observation& obs, const Pose& anchor_pose,
                                                         const Pose& leader_pose, double speed,
                                                         const CellPredicate& passable, const CellPredicate& is_goal,
                                                         CellIndex goal_hint) {
  const CellIndex here = cell_at(anchor_pose.position(), obs.cell_size);
  const Vec2 centre = cell_center(here, obs.cell_size);
  Vec2 waypoint;
  const bool centred = (anchor_pose.position() - centre).norm() < 1e-9;
  if (!centred) {
    waypoint = centre;
  } else {
    bool on = false;
    for (std::size_t i = 0; i < path_.size(); ++i)
      if (path_[i] == here) {
        next_ = i;
        on = true;
        break;
      }
    if (!on || motion_failed(obs) || obs.tick - planned_at_ > 300) {
      if (!plan(obs, here, passable, is_goal, goal_hint, true)) return std::nullopt;
    }
    if (next_ + 1 >= path_.size()) return DriveCommand{};
    waypoint = cell_center(path_[next_ + 1], obs.cell_size);
  }
  const Vec2 d = waypoint - anchor_pose.position();
  const double dist = d.norm();
  DriveCommand cmd;
  if (dist < 1e-12) return cmd;
  const Vec2 body = body_to_world(leader_pose.heading).transpose() * d;
  const double frac = std::min(1.0, dist / (speed * obs.dt));
  cmd.forward = body.x() / dist * frac;
  cmd.lateral = body.y() / dist * frac;
  return cmd;
}

}  // namespace orgsim
