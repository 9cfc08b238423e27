#include "orgsim/control.hpp"

#include <algorithm>
#include <cmath>

#include "orgsim/error.hpp"

namespace orgsim {

std::string_view action_name(const Action& a) {
  struct {
    std::string_view operator()(const IdleAction&) const { return "idle"; }
    std::string_view operator()(const DriveAction&) const { return "drive"; }
    std::string_view operator()(const ActuateAction&) const { return "actuate"; }
    std::string_view operator()(const DockAction&) const { return "dock"; }
    std::string_view operator()(const UndockAction&) const { return "undock"; }
    std::string_view operator()(const RechargeAction&) const { return "recharge"; }
    std::string_view operator()(const ToggleCoprocessorAction&) const { return "toggle_coprocessor"; }
    std::string_view operator()(const TowAction&) const { return "tow"; }
  } v;
  return std::visit(v, a);
}

std::string_view to_string(RejectReason r) {
  switch (r) {
    case RejectReason::Collision: return "collision";
    case RejectReason::Overload: return "overload";
    case RejectReason::Protocol: return "protocol";
    case RejectReason::InvalidCommand: return "invalid_command";
  }
  return "?";
}

// ---------------------------------------------------------------- MessageBus

bool MessageBus::reachable(const OrganismSet& organisms, const Fleet& fleet, ModuleId from, ModuleId to) const {
  if (from == to || from >= fleet.size() || to >= fleet.size()) return false;
  const auto& a = fleet.state(from);
  const auto& b = fleet.state(to);
  if (!a.alive() || !b.alive()) return false;
  const auto oa = organisms.organism_of(from);
  if (oa && oa == organisms.organism_of(to)) return true;
  return (a.pose.position() - b.pose.position()).norm() <= radio_range_;
}

MessageBus::SendResult MessageBus::send(const OrganismSet& organisms, const Fleet& fleet, Message msg,
                                        std::uint64_t tick) {
  if (!reachable(organisms, fleet, msg.from, msg.to)) return SendResult::Refused;
  msg.sent_tick = tick;
  auto& q = next_[msg.to];
  if (q.size() >= capacity_) {
    ++load_[msg.to];
    return SendResult::Dropped;
  }
  q.push_back(std::move(msg));
  return SendResult::Queued;
}

void MessageBus::advance(std::uint64_t tick) {
  tick_ = tick;
  ready_ = std::move(next_);
  next_.clear();
}

std::vector<Message> MessageBus::collect(ModuleId to) {
  auto it = ready_.find(to);
  if (it == ready_.end()) return {};
  auto out = std::move(it->second);
  ready_.erase(it);
  return out;
}

std::uint32_t MessageBus::bus_load(ModuleId m) const {
  auto it = load_.find(m);
  return it == load_.end() ? 0 : it->second;
}

// -------------------------------------------------------------- ModuleMemory

ModuleMemory::ModuleMemory(int width, int height)
    : width_(width),
      height_(height),
      terrain_(static_cast<std::size_t>(width) * height, -1),
      visited_(static_cast<std::size_t>(width) * height, 0) {}

void ModuleMemory::integrate(const Observation& obs) {
  for (const auto& s : obs.terrain)
    if (in_bounds(s.cell)) terrain_[index(s.cell)] = static_cast<std::int8_t>(s.terrain);
  if (in_bounds(obs.cell) && !visited_[index(obs.cell)]) {
    visited_[index(obs.cell)] = 1;
    ++visited_count_;
  }
  for (const auto& m : obs.inbox)
    if (const auto* st = std::get_if<StatusPayload>(&m.payload)) record_status(m.from, *st, m.sent_tick);
}

void ModuleMemory::record_status(ModuleId from, const StatusPayload& status, std::uint64_t sent_tick) {
  gossip_[from] = {status, sent_tick};
}

std::optional<TerrainClass> ModuleMemory::known(CellIndex c) const {
  if (!in_bounds(c)) return TerrainClass::Obstacle;
  const auto t = terrain_[index(c)];
  if (t < 0) return std::nullopt;
  return static_cast<TerrainClass>(t);
}

bool ModuleMemory::visited(CellIndex c) const { return in_bounds(c) && visited_[index(c)]; }

double ModuleMemory::coverage_fraction() const {
  return visited_.empty() ? 0.0 : static_cast<double>(visited_count_) / static_cast<double>(visited_.size());
}

// ---------------------------------------------------------------- controllers

void ControllerContext::propose(std::uint8_t priority, Action action) {
  if (proposals_.size() >= budget_)
    throw FrameworkError("controller '" + std::string(name_) + "' exceeded its per-tick proposal budget of " +
                         std::to_string(budget_));
  proposals_.push_back({id_, priority, std::move(action)});
}

void ControllerContext::send(ModuleId to, Payload payload) { outbox_.emplace_back(to, std::move(payload)); }

ControllerOutput step_controllers(const Observation& obs, std::span<ControllerSlot> controllers, std::size_t budget) {
  if (obs.health != Health::Ok) throw ArgumentError("step_controllers: module is not operational");
  ControllerOutput out;
  for (std::size_t i = 0; i < controllers.size(); ++i) {
    auto& slot = controllers[i];
    ControllerContext ctx(static_cast<ControllerId>(i), slot.controller->name(), slot.rng, budget);
    slot.controller->step(obs, ctx);
    for (auto& p : ctx.proposals()) out.proposals.push_back(std::move(p));
    for (auto& m : ctx.outbox()) out.outbox.push_back(std::move(m));
  }
  return out;
}

ActionProposal select_action(std::span<const ActionProposal> proposals) {
  const ActionProposal* best = nullptr;
  for (const auto& p : proposals) {
    if (!best || p.priority < best->priority || (p.priority == best->priority && p.source < best->source))
      best = &p;
  }
  if (!best) return ActionProposal{kNoController, 255, IdleAction{}};
  return *best;
}

// ---------------------------------------------------------------------- guard

std::pair<Face, Face> tow_faces(const ModuleState& self, const ModuleState& target) {
  const Vec2 d = target.pose.position() - self.pose.position();
  auto best_face = [](const Pose& pose, const Vec2& dir) {
    Face best = Face::North;
    double best_dot = -INFINITY;
    for (Face f : kAllFaces) {
      const double dot = unit_from_heading(pose.heading + face_offset_deg(f)).dot(dir);
      if (dot > best_dot + 1e-12) {
        best_dot = dot;
        best = f;
      }
    }
    return best;
  };
  return {best_face(self.pose, d), best_face(target.pose, -d)};
}

OrganismDriveCommand organism_command(const DriveCommand& cmd) {
  if (cmd.forward == 0.0 && cmd.lateral == 0.0 && cmd.angular != 0.0) return OrganismTurn{cmd.angular};
  return OrganismTranslate{cmd.forward, cmd.lateral};
}

namespace {

Rejected reject(RejectReason r, std::string detail) { return {r, std::move(detail)}; }

bool latched(const ModuleState& s) {
  return std::any_of(s.ports.begin(), s.ports.end(), [](const DockPort& p) { return phase_has_peer(p.phase); });
}

GuardResult guard_dock(const ModuleState& self, Face face, ModuleId peer_id, Face peer_face, bool tow,
                       const GuardView& view, const Action& pass) {
  if (peer_id >= view.fleet.size() || peer_id == self.id) return reject(RejectReason::Protocol, "no such peer");
  const auto& peer = view.fleet.state(peer_id);
  if (!peer.alive() && !tow) return reject(RejectReason::Protocol, "peer is not operational; tow required");
  if (peer.alive() && tow) return reject(RejectReason::Protocol, "tow target is operational");
  const auto& mine = self.port(face);
  const auto& theirs = peer.port(peer_face);
  if (mine.phase == DockPhase::Free && theirs.phase == DockPhase::Free) return pass;
  const auto partner = view.attempt_partner ? view.attempt_partner(mine.ref()) : std::nullopt;
  const bool same_attempt = partner && *partner == theirs.ref();
  if (same_attempt && (mine.phase == DockPhase::Approaching || mine.phase == DockPhase::Aligning ||
                       mine.phase == DockPhase::Locking))
    return pass;
  return reject(RejectReason::Protocol, "port phases (" + std::string(to_string(mine.phase)) + ", " +
                                            std::string(to_string(theirs.phase)) + ") forbid docking");
}

}  // namespace

GuardResult guard(const Action& action, const ModuleState& state, const GuardView& view) {
  const auto& spec = view.fleet.spec(state.id);

  if (const auto* drive = std::get_if<DriveAction>(&action)) {
    const Organism* org = view.organisms.organism_containing(state.id);
    if (org) {
      if (leader_of(*org, view.fleet) != state.id) return reject(RejectReason::Protocol, "not the organism leader");
      try {
        const auto r = organism_move(*org, view.fleet, organism_command(drive->cmd), view.terrain, view.dt);
        if (r.hits_obstacle) return reject(RejectReason::Collision, "organism would hit an obstacle");
      } catch (const InvalidCommandError& e) {
        return reject(RejectReason::InvalidCommand, e.what());
      }
      return action;
    }
    if (latched(state)) return reject(RejectReason::Protocol, "a port is latched");
    if (spec.drive == DriveKind::TrackedDifferential && drive->cmd.lateral != 0.0)
      return reject(RejectReason::InvalidCommand, "tracked drive cannot move sideways");
    const auto step = locomotion_step(state, spec, drive->cmd, view.terrain, view.dt);
    if (check_path(view.terrain, state.pose.position(), step.attempted.position(), spec.cls).hits_obstacle)
      return reject(RejectReason::Collision, "drive would enter an obstacle or leave the arena");
    return action;
  }

  if (const auto* act = std::get_if<ActuateAction>(&action)) {
    if (act->dof < 0 || act->dof >= spec.dof_count) return reject(RejectReason::InvalidCommand, "no such dof");
    const double lim = spec.dof_limit(act->dof);
    ActuateAction clamped = *act;
    clamped.target = std::clamp(act->target, -lim, lim);
    if (spec.dof_bends(act->dof, state.joint_mode)) {
      if (const Organism* org = view.organisms.organism_containing(state.id)) {
        const double need = front_lift_torque(*org, view.fleet, state.id);
        if (need > spec.max_torque) return reject(RejectReason::Overload, "lift needs " + std::to_string(need) + " N*m");
      }
    }
    return Action{clamped};
  }

  if (const auto* dock = std::get_if<DockAction>(&action))
    return guard_dock(state, dock->face, dock->peer, dock->peer_face, false, view, action);

  if (const auto* tow = std::get_if<TowAction>(&action)) {
    if (tow->target >= view.fleet.size() || tow->target == state.id)
      return reject(RejectReason::Protocol, "no such tow target");
    const auto& target = view.fleet.state(tow->target);
    const auto [mine, theirs] = tow_faces(state, target);
    return guard_dock(state, mine, tow->target, theirs, true, view, action);
  }

  if (const auto* un = std::get_if<UndockAction>(&action)) {
    if (state.port(un->face).phase != DockPhase::Docked) return reject(RejectReason::Protocol, "port is not docked");
    return action;
  }

  return action;
}

// -------------------------------------------------------------------- fitness

FitnessVector fitness(const Observation& obs, const ModuleMemory& memory) {
  FitnessVector f;
  f.global_approx = memory.coverage_fraction();
  double nearest = INFINITY;
  for (const auto& s : obs.sockets)
    if (s.active) nearest = std::min(nearest, (s.position - obs.pose.position()).norm());
  f.local = std::isfinite(nearest) ? 1.0 / (1.0 + nearest) : 0.0;
  int docked = 0;
  for (const auto& p : obs.ports) docked += p.phase == DockPhase::Docked;
  f.interaction = docked / 4.0;
  f.internal = std::clamp(obs.battery_fraction, 0.0, 1.0);
  return f;
}

}  // namespace orgsim
