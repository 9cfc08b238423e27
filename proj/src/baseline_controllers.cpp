#include "orgsim/baseline_controllers.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "orgsim/docking.hpp"
#include "orgsim/navigation.hpp"

namespace orgsim {

int crew_length(double height, double edge_length) {
  return std::max(1, static_cast<int>(std::ceil(height / edge_length - 1e-9)));
}

Pose crew_slot_pose(const SensedSocket& socket, int slot, double edge_length) {
  const Vec2 p = socket.position + slot * edge_length * socket.wall_normal;
  return {p.x(), p.y(), heading_of(-socket.wall_normal)};
}

Pose tow_slot_pose(const Pose& dead, int side, double edge_length) {
  const double dir = side == 0 ? 90.0 : -90.0;
  const Vec2 p = dead.position() + edge_length * unit_from_heading(dead.heading + dir);
  return {p.x(), p.y(), dead.heading};
}

namespace {

struct Plan {
  std::map<ModuleId, GoalRecord> goals;
  std::map<SocketId, SensedSocket> sockets;  // active only
  std::map<ModuleId, DeadSighting> dead;
};

double lift_torque(int carried, double edge_length) {
  // Default-mass modules at cumulative lever arms edge, 2 edge, ...
  double t = 0;
  for (int k = 1; k <= carried; ++k) t += 1.0 * kGravity * k * edge_length;
  return t;
}

bool can_lift(ModuleClass cls, int carried, double edge_length) {
  const auto spec = make_module_spec(cls);
  return carried == 0 || lift_torque(carried, edge_length) <= spec.max_torque + 1e-12;
}

struct Member {
  ModuleId id;
  const StatusPayload* status;
};

Plan compute_plan(const std::map<ModuleId, GossipEntry>& gossip, std::uint64_t now, double edge) {
  Plan plan;
  std::map<ModuleId, const StatusPayload*> alive;
  std::set<ModuleId> disposed;
  for (const auto& [id, entry] : gossip) {
    if (entry.sent_tick + 3 * kStatusPeriod / 2 < now) continue;
    alive[id] = &entry.status;
  }
  for (const auto& [id, st] : alive) {
    for (const auto& s : st->sockets)
      if (s.active) plan.sockets.emplace(s.id, s);
    for (const auto& d : st->dead) {
      auto [it, fresh] = plan.dead.emplace(d.id, d);
      if (!fresh) it->second.in_graveyard = it->second.in_graveyard || d.in_graveyard;
    }
    disposed.insert(st->disposed.begin(), st->disposed.end());
  }
  for (const auto& [id, st] : alive) plan.goals[id] = GoalRecord{};

  auto pos = [&](ModuleId m) { return alive.at(m)->pose.position(); };
  std::set<ModuleId> busy;

  // Disposal first: up to two Active Wheels per dead module outside the graveyard.
  for (const auto& [dead_id, sighting] : plan.dead) {
    if (sighting.in_graveyard || disposed.count(dead_id) || alive.count(dead_id)) continue;
    std::vector<ModuleId> keep;
    std::vector<std::pair<double, ModuleId>> others;
    for (const auto& [id, st] : alive) {
      if (st->cls != ModuleClass::ActiveWheel || busy.count(id)) continue;
      if (st->goal.kind == GoalRecord::Kind::Dispose && st->goal.target == dead_id)
        keep.push_back(id);
      else
        others.emplace_back((pos(id) - sighting.pose.position()).norm(), id);
    }
    std::sort(others.begin(), others.end());
    std::vector<ModuleId> chosen(keep.begin(), keep.begin() + std::min<std::size_t>(2, keep.size()));
    for (const auto& [d, id] : others)
      if (chosen.size() < 2) chosen.push_back(id);
    if (chosen.empty()) continue;

    std::array<std::optional<ModuleId>, 2> side;
    std::vector<ModuleId> unsided;
    for (ModuleId m : chosen) {
      const auto& g = alive.at(m)->goal;
      if (g.kind == GoalRecord::Kind::Dispose && g.target == dead_id && (g.slot == 0 || g.slot == 1) &&
          !side[g.slot])
        side[g.slot] = m;
      else
        unsided.push_back(m);
    }
    auto slot_dist = [&](ModuleId m, int s) {
      return (pos(m) - tow_slot_pose(sighting.pose, s, edge).position()).norm();
    };
    if (unsided.size() == 2) {
      const ModuleId a = unsided[0], b = unsided[1];
      if (slot_dist(a, 0) + slot_dist(b, 1) <= slot_dist(a, 1) + slot_dist(b, 0)) {
        side[0] = a;
        side[1] = b;
      } else {
        side[0] = b;
        side[1] = a;
      }
    } else if (unsided.size() == 1) {
      if (!side[0] && !side[1])
        side[slot_dist(unsided[0], 0) <= slot_dist(unsided[0], 1) ? 0 : 1] = unsided[0];
      else
        side[side[0] ? 1 : 0] = unsided[0];
    }
    for (int s = 0; s < 2; ++s)
      if (side[s]) {
        plan.goals[*side[s]] = {GoalRecord::Kind::Dispose, dead_id, s};
        busy.insert(*side[s]);
      }
  }

  std::vector<ModuleId> free;
  for (const auto& [id, st] : alive)
    if (!busy.count(id)) free.push_back(id);

  auto battery = [&](ModuleId m) { return alive.at(m)->battery_fraction; };

  auto assign_fresh = [&](const SensedSocket& socket, std::vector<ModuleId> members) {
    const int len = crew_length(socket.height, edge);
    if (static_cast<int>(members.size()) < len) return;
    auto dist = [&](ModuleId m) { return (pos(m) - socket.position).norm(); };
    std::sort(members.begin(), members.end(),
              [&](ModuleId a, ModuleId b) { return std::pair(dist(a), a) < std::pair(dist(b), b); });
    std::optional<ModuleId> lifter;
    if (len > 1) {
      for (ModuleId m : members)
        if (can_lift(alive.at(m)->cls, len - 1, edge)) {
          lifter = m;
          break;
        }
      if (!lifter) return;
    }
    int slot = 0;
    for (ModuleId m : members) {
      if (lifter && m == *lifter) continue;
      if (lifter && slot == len - 1) ++slot;
      plan.goals[m] = {GoalRecord::Kind::Crew, socket.id, slot++};
    }
    if (lifter) plan.goals[*lifter] = {GoalRecord::Kind::Crew, socket.id, len - 1};
  };

  // A crew keeps going while its socket is on and someone in it is still charging.
  std::map<SocketId, std::vector<ModuleId>> crews;
  for (ModuleId m : free)
    if (alive.at(m)->goal.kind == GoalRecord::Kind::Crew) crews[alive.at(m)->goal.target].push_back(m);
  std::optional<SocketId> current;
  for (const auto& [sid, members] : crews) {
    if (!plan.sockets.count(sid)) continue;
    const bool charging = std::any_of(members.begin(), members.end(), [&](ModuleId m) { return battery(m) < kFullFraction; });
    if (charging && (!current || members.size() > crews[*current].size())) current = sid;
  }

  if (current) {
    const auto& socket = plan.sockets.at(*current);
    const int len = crew_length(socket.height, edge);
    auto members = crews[*current];
    std::set<int> slots;
    int max_slot = -1;
    bool lifter_ok = len <= 1;
    for (ModuleId m : members) {
      const int s = alive.at(m)->goal.slot;
      slots.insert(s);
      max_slot = std::max(max_slot, s);
      if (s == len - 1 && can_lift(alive.at(m)->cls, len - 1, edge)) lifter_ok = true;
    }
    bool intact = lifter_ok && slots.size() == members.size();
    for (int s = 0; s < len; ++s) intact = intact && slots.count(s);
    std::vector<ModuleId> joiners;
    for (ModuleId m : free)
      if (alive.at(m)->goal.kind != GoalRecord::Kind::Crew || alive.at(m)->goal.target != *current)
        if (battery(m) < kHungryFraction) joiners.push_back(m);
    if (intact) {
      for (ModuleId m : members) plan.goals[m] = alive.at(m)->goal;
      for (ModuleId m : joiners) plan.goals[m] = {GoalRecord::Kind::Crew, *current, ++max_slot};
    } else {
      members.insert(members.end(), joiners.begin(), joiners.end());
      assign_fresh(socket, members);
    }
    return plan;
  }

  std::optional<ModuleId> hungriest;
  for (ModuleId m : free)
    if (battery(m) < kHungryFraction && (!hungriest || battery(m) < battery(*hungriest))) hungriest = m;
  if (!hungriest || plan.sockets.empty()) return plan;
  const SensedSocket* best = nullptr;
  double best_d = INFINITY;
  for (const auto& [sid, s] : plan.sockets) {
    const double d = (s.position - pos(*hungriest)).norm();
    if (d < best_d) {
      best_d = d;
      best = &s;
    }
  }
  assign_fresh(*best, free);
  return plan;
}

bool singleton(const Observation& obs) {
  if (obs.organism) return false;
  return std::none_of(obs.ports.begin(), obs.ports.end(), [](const PortView& p) { return phase_has_peer(p.phase); });
}

bool at_pose(const Pose& a, const Pose& b) {
  return (a.position() - b.position()).norm() < 1e-6 && std::abs(heading_delta(a.heading, b.heading)) < 1e-6;
}

const SensedModule* sensed(const Observation& obs, ModuleId id) {
  for (const auto& m : obs.nearby)
    if (m.id == id) return &m;
  return nullptr;
}

/// Back away from a port that is separating.
std::optional<DriveCommand> separate(const Observation& obs) {
  if (!singleton(obs)) return std::nullopt;
  for (Face f : kAllFaces) {
    if (obs.ports[static_cast<int>(f)].phase != DockPhase::Separating) continue;
    DriveCommand cmd;
    if (f == Face::North) {
      cmd.forward = -1;
    } else if (f == Face::South) {
      cmd.forward = 1;
    } else if (obs.spec.drive != DriveKind::TrackedDifferential) {
      cmd.lateral = f == Face::West ? -1 : 1;
    } else {
      cmd.forward = 1;
    }
    return cmd;
  }
  return std::nullopt;
}

/// Plan state shared in shape (not in memory) by the aggregate and disposal controllers.
class Planner {
 public:
  void update(const Observation& obs) {
    if (obs.memory && (obs.tick % kStatusPeriod == 1 || !planned_)) {
      plan_ = compute_plan(obs.memory->gossip(), obs.tick, obs.spec.edge_length);
      planned_ = obs.tick % kStatusPeriod == 1;
    }
  }
  GoalRecord goal(ModuleId id) const {
    auto it = plan_.goals.find(id);
    return it == plan_.goals.end() ? GoalRecord{} : it->second;
  }
  const Plan& plan() const { return plan_; }
  std::optional<ModuleId> member_at(SocketId socket, int slot) const {
    for (const auto& [id, g] : plan_.goals)
      if (g.kind == GoalRecord::Kind::Crew && g.target == socket && g.slot == slot) return id;
    return std::nullopt;
  }

 private:
  Plan plan_;
  bool planned_ = false;
};

// ------------------------------------------------------------------ explore

class ExploreController final : public Controller {
 public:
  std::string_view name() const override { return "explore"; }
  void step(const Observation& obs, ControllerContext& ctx) override {
    if (!singleton(obs) || !obs.memory) return;
    const bool failed = obs.last_action == "drive" && obs.last_outcome != Outcome::Executed;
    if (!target_ || obs.tick >= deadline_ || (failed && ++failures_ > 3) ||
        (obs.pose.position() - *target_).norm() < 1e-6) {
      pick(obs, ctx.rng());
    }
    auto cmd = follower_.step(obs, *target_, known_passable(*obs.memory, obs.spec.cls));
    if (!cmd) {
      pick(obs, ctx.rng());
      return;
    }
    ctx.propose(priority::kExplore, DriveAction{*cmd});
  }

 private:
  void pick(const Observation& obs, Rng& rng) {
    const CellIndex c{static_cast<int>(rng.uniform_int(0, obs.arena_width - 1)),
                      static_cast<int>(rng.uniform_int(0, obs.arena_height - 1))};
    target_ = cell_center(c, obs.cell_size);
    deadline_ = obs.tick + 600;
    failures_ = 0;
    follower_.reset();
  }

  std::optional<Vec2> target_;
  std::uint64_t deadline_ = 0;
  int failures_ = 0;
  PathFollower follower_;
};

// -------------------------------------------------------------- seek energy

class SeekEnergyController final : public Controller {
 public:
  std::string_view name() const override { return "seek_energy"; }
  void step(const Observation& obs, ControllerContext& ctx) override {
    if (obs.last_action == "recharge" && obs.last_outcome == Outcome::Refused) backoff_until_ = obs.tick + 30;
    if (obs.tick < backoff_until_) return;
    const SensedSocket* nearest = nullptr;
    double best = INFINITY;
    for (const auto& s : obs.sockets) {
      if (!s.active) continue;
      const double d = (s.position - obs.pose.position()).norm();
      if (d < best) {
        best = d;
        nearest = &s;
      }
    }
    if (!nearest) return;
    if (obs.battery_fraction < kCriticalFraction) {
      ctx.propose(priority::kCriticalEnergy, RechargeAction{nearest->id});
      return;
    }
    if (obs.battery_fraction >= 0.98 || obs.organism_members.size() < 2) return;
    const bool mid_dock = std::any_of(obs.ports.begin(), obs.ports.end(), [](const PortView& p) {
      return p.phase == DockPhase::Approaching || p.phase == DockPhase::Aligning || p.phase == DockPhase::Locking;
    });
    if (mid_dock) return;
    if (best > (static_cast<double>(obs.organism_members.size()) + 1) * obs.spec.edge_length) return;
    ctx.propose(priority::kEnergy, RechargeAction{nearest->id});
  }

 private:
  std::uint64_t backoff_until_ = 0;
};

// ---------------------------------------------------------------- aggregate

class AggregateController final : public Controller {
 public:
  std::string_view name() const override { return "aggregate"; }

  void step(const Observation& obs, ControllerContext& ctx) override {
    for (const auto& m : obs.nearby) {
      if (m.health == Health::Ok) continue;
      dead_[m.id] = {m.id, m.pose, m.in_graveyard};
      if (m.in_graveyard) disposed_.insert(m.id);
    }
    if (obs.memory)
      for (const auto& [id, entry] : obs.memory->gossip())
        disposed_.insert(entry.status.disposed.begin(), entry.status.disposed.end());

    if (obs.tick % kStatusPeriod == 0) broadcast(obs, ctx);
    planner_.update(obs);
    goal_ = planner_.goal(obs.id);
    act(obs, ctx);
  }

 private:
  void broadcast(const Observation& obs, ControllerContext& ctx) {
    StatusPayload st;
    st.cls = obs.spec.cls;
    st.pose = obs.pose;
    st.battery_fraction = obs.battery_fraction;
    st.goal = goal_;
    for (Face f : kAllFaces)
      if (obs.ports[static_cast<int>(f)].phase == DockPhase::Docked) st.docked_mask |= 1u << static_cast<int>(f);
    st.sockets = obs.sockets;
    for (const auto& [id, d] : dead_) st.dead.push_back(d);
    st.disposed.assign(disposed_.begin(), disposed_.end());
    ctx.send(kBroadcast, std::move(st));
  }

  void act(const Observation& obs, ControllerContext& ctx) {
    const bool crew = goal_.kind == GoalRecord::Kind::Crew;
    std::optional<ModuleId> north_peer;
    if (crew && goal_.slot > 0) north_peer = planner_.member_at(goal_.target, goal_.slot - 1);

    // Release docks this controller owns that no longer fit the plan.
    for (const auto& n : obs.docked) {
      const auto& port = obs.ports[static_cast<int>(n.my_face)];
      if (port.tow) continue;
      const bool dead_peer = n.health != Health::Ok;
      const bool stale_north = n.my_face == Face::North && (!crew || north_peer != n.id);
      const bool side = n.my_face == Face::East || n.my_face == Face::West;
      if (dead_peer || stale_north || side) {
        ctx.propose(priority::kTask, UndockAction{n.my_face});
        return;
      }
    }
    if (auto cmd = separate(obs)) {
      ctx.propose(priority::kTask, DriveAction{*cmd});
      return;
    }
    if (!crew) return;
    auto socket_it = planner_.plan().sockets.find(goal_.target);
    if (socket_it == planner_.plan().sockets.end()) return;
    const Pose slot = crew_slot_pose(socket_it->second, goal_.slot, obs.spec.edge_length);

    if (!at_pose(obs.pose, slot)) {
      if (!singleton(obs) || !obs.memory) return;
      if ((obs.pose.position() - slot.position()).norm() < 1e-6) {
        ctx.propose(priority::kTask, DriveAction{turn_toward(obs.pose, obs.spec, slot.heading, obs.dt)});
        return;
      }
      if (auto cmd = follower_.step(obs, slot.position(), known_passable(*obs.memory, obs.spec.cls)))
        ctx.propose(priority::kTask, DriveAction{*cmd});
      return;
    }
    follower_.reset();
    const auto& north = obs.ports[static_cast<int>(Face::North)];
    if (north_peer && north.phase != DockPhase::Docked) {
      const bool ours = north.phase == DockPhase::Free || (north.peer && north.peer->module == *north_peer);
      const SensedModule* peer = sensed(obs, *north_peer);
      if (ours && peer && peer->health == Health::Ok &&
          peer->ports[static_cast<int>(Face::South)] != DockPhase::Docked) {
        const Pose peer_slot = crew_slot_pose(socket_it->second, goal_.slot - 1, obs.spec.edge_length);
        if (at_pose(peer->pose, peer_slot)) {
          ctx.propose(priority::kTask, DockAction{Face::North, *north_peer, Face::South});
          return;
        }
      }
    }
    ctx.propose(priority::kTask, IdleAction{});
  }

  Planner planner_;
  GoalRecord goal_;
  PathFollower follower_;
  std::map<ModuleId, DeadSighting> dead_;
  std::set<ModuleId> disposed_;
};

// ----------------------------------------------------------------- disposal

class DisposalController final : public Controller {
 public:
  std::string_view name() const override { return "disposal"; }

  void step(const Observation& obs, ControllerContext& ctx) override {
    planner_.update(obs);
    const GoalRecord goal = planner_.goal(obs.id);

    // Let go of a towed module once it lies in the graveyard, or when the plan moved on.
    for (const auto& n : obs.docked) {
      if (!obs.ports[static_cast<int>(n.my_face)].tow) continue;
      const SensedModule* s = sensed(obs, n.id);
      const bool done = s && s->in_graveyard;
      const bool dropped = goal.kind != GoalRecord::Kind::Dispose || goal.target != n.id;
      if (done || dropped) {
        ctx.propose(priority::kTask, UndockAction{n.my_face});
        return;
      }
    }
    if (goal.kind != GoalRecord::Kind::Dispose) return;
    if (auto cmd = separate(obs)) {
      ctx.propose(priority::kTask, DriveAction{*cmd});
      return;
    }

    const ModuleId target = goal.target;
    const SensedModule* dead = sensed(obs, target);
    Pose dead_pose;
    if (dead) {
      if (dead->in_graveyard) return;
      dead_pose = dead->pose;
    } else if (auto it = planner_.plan().dead.find(target); it != planner_.plan().dead.end()) {
      dead_pose = it->second.pose;
    } else {
      return;
    }

    const bool towing = std::any_of(obs.docked.begin(), obs.docked.end(), [&](const NeighborView& n) {
      return n.id == target && obs.ports[static_cast<int>(n.my_face)].tow;
    });
    if (towing) {
      if (!obs.is_leader || !obs.memory) {
        ctx.propose(priority::kTask, IdleAction{});
        return;
      }
      // Wait for every assigned carrier before moving off.
      for (const auto& [id, g] : planner_.plan().goals) {
        if (g.kind != GoalRecord::Kind::Dispose || g.target != target) continue;
        const bool aboard = std::any_of(obs.organism_members.begin(), obs.organism_members.end(),
                                        [&](const MemberView& m) { return m.id == id && m.health == Health::Ok; });
        const SensedModule* carrier = sensed(obs, id);
        if (!aboard && carrier && carrier->health == Health::Ok) {
          ctx.propose(priority::kTask, IdleAction{});
          return;
        }
      }
      double speed = INFINITY;
      for (const auto& m : obs.organism_members)
        if (m.health == Health::Ok) speed = std::min(speed, make_module_spec(m.cls).max_speed);
      const GridRect yard = obs.graveyard;
      auto passable = footprint_passable(*obs.memory, ModuleClass::ActiveWheel);
      auto is_goal = [&](CellIndex c) { return yard.contains(c); };
      const CellIndex hint{(yard.x0 + yard.x1) / 2, (yard.y0 + yard.y1) / 2};
      auto cmd = follower_.step_translate(obs, dead_pose, obs.pose, speed, passable, is_goal, hint);
      ctx.propose(priority::kTask, cmd ? Action{DriveAction{*cmd}} : Action{IdleAction{}});
      return;
    }

    if (!singleton(obs) || !obs.memory) return;
    const Pose slot = tow_slot_pose(dead_pose, goal.slot, obs.spec.edge_length);
    if (at_pose(obs.pose, slot)) {
      follower_.reset();
      ctx.propose(priority::kTask, TowAction{target});
      return;
    }
    if ((obs.pose.position() - slot.position()).norm() < 1e-6) {
      ctx.propose(priority::kTask, DriveAction{turn_toward(obs.pose, obs.spec, slot.heading, obs.dt)});
      return;
    }
    if (auto cmd = follower_.step(obs, slot.position(), known_passable(*obs.memory, obs.spec.cls)))
      ctx.propose(priority::kTask, DriveAction{*cmd});
  }

 private:
  Planner planner_;
  PathFollower follower_;
};

}  // namespace

std::map<ModuleId, GoalRecord> plan_goals(const std::map<ModuleId, GossipEntry>& gossip, std::uint64_t now,
                                          double edge_length) {
  return compute_plan(gossip, now, edge_length).goals;
}

const std::vector<std::string_view>& builtin_controller_names() {
  static const std::vector<std::string_view> names{"seek_energy", "aggregate", "disposal", "explore"};
  return names;
}

std::unique_ptr<Controller> make_builtin_controller(std::string_view name) {
  if (name == "seek_energy") return std::make_unique<SeekEnergyController>();
  if (name == "aggregate") return std::make_unique<AggregateController>();
  if (name == "disposal") return std::make_unique<DisposalController>();
  if (name == "explore") return std::make_unique<ExploreController>();
  return nullptr;
}

}  // namespace orgsim
