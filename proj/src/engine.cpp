#include "orgsim/engine.hpp"

#include <algorithm>
#include <cmath>

#include "orgsim/baseline_controllers.hpp"
#include "orgsim/docking.hpp"
#include "orgsim/error.hpp"

namespace orgsim {

struct Simulation::ModuleRuntime {
  ModuleMemory memory;
  std::vector<ControllerSlot> controllers;
  std::vector<std::string> controller_names;
  std::optional<CellIndex> last_cell;
  Outcome last_outcome = Outcome::None;
  std::string_view last_action = "idle";
  ActivityBreakdown activity;
  std::optional<double> last_fitness;
  std::pair<std::string, std::string_view> credit_source{"none", "idle"};
  std::map<std::pair<std::string, std::string_view>, std::pair<std::uint64_t, double>> credit;
  ControllerOutput output;
  std::uint32_t logged_bus_load = 0;
};

namespace {

std::string mid(ModuleId m) { return "m" + std::to_string(m); }
std::string fmt(double v) { return format_double(v); }

std::string node_list(const std::vector<ModuleId>& nodes) {
  std::string s;
  for (auto n : nodes) s += (s.empty() ? "" : ",") + std::to_string(n);
  return s;
}

std::string port_str(PortRef p) { return mid(p.module) + ":" + std::string(to_string(p.face)); }

}  // namespace

Simulation::Simulation(const ScenarioConfig& config, EngineOptions options)
    : config_(config),
      options_(std::move(options)),
      arena_(config.arena),
      log_(options_.keep_log_text, options_.log_mirror),
      bus_(config.sensing.bus_capacity, config.sensing.radio_range),
      hazard_rng_(stream_seed(config.seed, "hazard")) {
  terrain_ = arena_.lookup();
  total_ticks_ = options_.ticks.value_or(config_.total_ticks());
  hazard_p_ = hazard_probability(config_.hazard_rate, config_.ticks_per_day);
  arena_.resolve_socket_ratings(config_.seed);
  ScheduleParams sp = config_.schedule;
  sp.seed = config_.seed;
  schedule_.emplace(sp, arena_.sockets().size());
  covered_.assign(arena_.cell_count(), 0);
  ledger_.efficiency = config_.tariff.recharge_efficiency;

  emit("run", "begin", {{"format", "1"}});
  for (const auto& [k, v] : config_.echo()) emit("run", "config", {{"key", k}, {"value", v}});
  for (const auto& s : arena_.sockets())
    emit("s" + std::to_string(s.id), "socket",
         {{"x", std::to_string(s.anchor.x)},
          {"y", std::to_string(s.anchor.y)},
          {"height", fmt(s.height)},
          {"rating", fmt(s.power_rating)}});
  spawn_modules();
}

Simulation::~Simulation() = default;

void Simulation::emit(std::string subject, std::string kind, std::vector<std::pair<std::string, std::string>> fields) {
  LogRecord r{tick_, std::move(subject), std::move(kind), std::move(fields)};
  log_.append(r);
  metrics_.consume(r);
}

void Simulation::emit_topology(const std::vector<TopologyEvent>& events) {
  for (const auto& e : events) {
    std::vector<std::pair<std::string, std::string>> f{{"nodes", node_list(e.nodes)}};
    if (e.other) f.emplace_back("other", "o" + std::to_string(*e.other));
    emit("o" + std::to_string(e.id), std::string(to_string(e.kind)), std::move(f));
  }
}

void Simulation::spawn_modules() {
  std::vector<SpawnSpec> roster = config_.spawns;
  std::vector<std::uint8_t> taken(arena_.cell_count(), 0);
  for (const auto& s : roster)
    if (auto c = arena_.cell_of(s.pose.position())) taken[arena_.index(*c)] = 1;
  for (const auto& s : arena_.sockets()) taken[arena_.index(s.anchor)] = 1;

  std::vector<CellIndex> free;
  for (int y = 0; y < arena_.height(); ++y)
    for (int x = 0; x < arena_.width(); ++x) {
      const CellIndex c{x, y};
      if (arena_.terrain(c) == TerrainClass::Plain && !arena_.graveyard().contains(c) && !taken[arena_.index(c)])
        free.push_back(c);
    }
  Rng rng(stream_seed(config_.seed, "placement"));
  std::size_t next = 0;
  for (auto cls : kAllClasses) {
    auto it = config_.counts.find(cls);
    const std::uint32_t n = it == config_.counts.end() ? 0 : it->second;
    for (std::uint32_t i = 0; i < n; ++i) {
      if (next >= free.size()) throw ConfigError("roster", "not enough free cells for seeded placement");
      const auto j = static_cast<std::size_t>(rng.uniform_int(next, free.size() - 1));
      std::swap(free[next], free[j]);
      const Vec2 p = arena_.cell_center(free[next++]);
      roster.push_back({cls, {p.x(), p.y(), 90.0 * static_cast<double>(rng.uniform_int(0, 3))}, 1.0, Health::Ok});
    }
  }

  for (const auto& s : roster) {
    auto ov = config_.overrides.count(s.cls) ? config_.overrides.at(s.cls) : SpecOverrides{};
    const auto spec = make_module_spec(s.cls, ov);
    const ModuleId id = fleet_.add(spec, s.pose);
    auto& st = fleet_.state(id);
    st.battery = quantize_energy_down(s.battery_fraction * spec.battery_capacity);
    st.health = s.health;
    if (st.health == Health::Ok && st.battery <= 0) st.health = Health::EnergyDead;
    if (st.health == Health::EnergyDead) st.battery = 0;

    auto rt = std::make_unique<ModuleRuntime>();
    rt->memory = ModuleMemory(arena_.width(), arena_.height());
    auto names_it = config_.controllers.find(s.cls);
    if (names_it != config_.controllers.end()) {
      for (const auto& name : names_it->second) {
        std::unique_ptr<Controller> c;
        if (auto f = options_.extra_controllers.find(name); f != options_.extra_controllers.end())
          c = f->second(id, s.cls);
        else
          c = make_builtin_controller(name);
        if (!c) throw ConfigError("controllers." + std::string(to_string(s.cls)), "unknown controller '" + name + "'");
        rt->controllers.push_back({std::move(c), Rng(stream_seed(config_.seed, "controller/" + name, id))});
        rt->controller_names.push_back(name);
      }
    }
    runtime_.push_back(std::move(rt));

    emit(mid(id), "spawn",
         {{"class", std::string(to_string(s.cls))},
          {"x", fmt(st.pose.x)},
          {"y", fmt(st.pose.y)},
          {"heading", fmt(st.pose.heading)},
          {"battery", fmt(st.battery)},
          {"health", std::string(to_string(st.health))}});
  }
  double initial = 0;
  for (const auto& st : fleet_.states) initial += st.battery;
  ledger_.initial_stored = initial;
  ledger_.stored = initial;
}

// ------------------------------------------------------------------- phases

void Simulation::phase_schedule() {
  auto& sockets = arena_.sockets();
  for (SocketId id : schedule_->step(tick_, sockets)) {
    auto it = std::find_if(sockets.begin(), sockets.end(), [&](const Socket& s) { return s.id == id; });
    emit("s" + std::to_string(id), it->active ? "socket_on" : "socket_off");
  }
}

Observation Simulation::sense(ModuleId m) {
  auto& rt = *runtime_[m];
  const auto& st = fleet_.state(m);
  const auto& spec = fleet_.spec(m);
  Observation obs;
  obs.tick = tick_;
  obs.dt = config_.dt;
  obs.id = m;
  obs.spec = spec;
  obs.memory = &rt.memory;
  obs.graveyard = arena_.graveyard();
  obs.arena_width = arena_.width();
  obs.arena_height = arena_.height();
  obs.cell_size = arena_.cell_size();

  obs.pose = st.pose;
  obs.cell = *arena_.cell_of(st.pose.position());
  obs.in_graveyard = arena_.graveyard().contains(obs.cell);
  obs.sockets = sense_sockets(arena_, st.pose, config_.sensing.socket_range);
  const double r2 = config_.sensing.module_range * config_.sensing.module_range;
  for (const auto& other : fleet_.states) {
    if (other.id == m) continue;
    if ((other.pose.position() - st.pose.position()).squaredNorm() > r2) continue;
    if (!line_of_sight(arena_, st.pose.position(), other.pose.position())) continue;
    SensedModule s{other.id, other.cls, other.pose, other.health, in_graveyard(arena_, other.pose), {}};
    for (int f = 0; f < 4; ++f) s.ports[f] = other.ports[f].phase;
    obs.nearby.push_back(std::move(s));
  }
  if (!rt.last_cell || *rt.last_cell != obs.cell) {
    const double rad = config_.sensing.terrain_radius;
    const int span = static_cast<int>(std::ceil(rad / arena_.cell_size()));
    for (int dy = -span; dy <= span; ++dy)
      for (int dx = -span; dx <= span; ++dx) {
        const CellIndex c{obs.cell.x + dx, obs.cell.y + dy};
        if (!arena_.in_bounds(c) || rt.memory.known(c)) continue;
        if ((arena_.cell_center(c) - st.pose.position()).norm() > rad) continue;
        obs.terrain.push_back({c, arena_.terrain(c)});
      }
    rt.last_cell = obs.cell;
  }

  for (int f = 0; f < 4; ++f) {
    const auto& p = st.ports[f];
    obs.ports[f] = {p.phase, p.peer, p.tow};
    if (!p.peer) obs.ports[f].peer = attempt_partner(PortRef{m, static_cast<Face>(f)});
    if (p.phase == DockPhase::Docked && p.peer) {
      const auto& n = fleet_.state(p.peer->module);
      obs.docked.push_back({n.id, n.cls, static_cast<Face>(f), p.peer->face,
                            n.battery / fleet_.spec(n.id).battery_capacity, n.joint_angles, n.pose, n.health});
    }
  }
  if (const Organism* org = organisms_.organism_containing(m)) {
    obs.organism = org->id;
    for (ModuleId n : org->nodes) {
      const auto& ns = fleet_.state(n);
      obs.organism_members.push_back({n, ns.cls, ns.pose, ns.health});
    }
    obs.is_leader = leader_of(*org, fleet_) == m;
  }
  obs.inbox = bus_.collect(m);

  obs.health = st.health;
  obs.battery_fraction = st.battery / spec.battery_capacity;
  obs.joint_angles = st.joint_angles;
  obs.coprocessor_on = st.coprocessor_on;
  obs.bus_load = bus_.bus_load(m);
  obs.last_outcome = rt.last_outcome;
  obs.last_action = rt.last_action;

  rt.memory.integrate(obs);
  const auto ci = arena_.index(obs.cell);
  if (!covered_[ci]) {
    covered_[ci] = 1;
    ++covered_count_;
  }
  const double f = fitness(obs, rt.memory).sum();
  if (rt.last_fitness) {
    auto& c = rt.credit[rt.credit_source];
    ++c.first;
    c.second += f - *rt.last_fitness;
  }
  rt.last_fitness = f;
  return obs;
}

std::optional<PortRef> Simulation::attempt_partner(PortRef p) const {
  auto it = partner_.find(p);
  if (it == partner_.end()) return std::nullopt;
  return it->second;
}

double Simulation::organism_reach(const Organism& org) {
  auto it = reach_cache_.find(org.id);
  if (it != reach_cache_.end()) return it->second;
  const double r = reach_height(org, fleet_);
  reach_cache_.emplace(org.id, r);
  return r;
}

void Simulation::execute_dock(ModuleId m, PortRef mine, PortRef theirs, bool tow, ModuleRuntime& rt) {
  const auto edge = DockEdge::make(mine, theirs);
  if (auto it = attempts_.find(edge); it != attempts_.end()) {
    it->second.touched = true;
    rt.last_outcome = Outcome::Executed;
    return;
  }
  auto& a = fleet_.state(mine.module).port(mine.face);
  auto& b = fleet_.state(theirs.module).port(theirs.face);
  DockInput in{DockSignal::Approach, false, tow, fleet_.state(mine.module).health, fleet_.state(theirs.module).health};
  advance_dock(a, b, in);
  attempts_[edge] = {mine, theirs, tow, true, tick_};
  partner_[mine] = theirs;
  partner_[theirs] = mine;
  emit(mid(m), "dock_start", {{"port", port_str(mine)}, {"peer", port_str(theirs)}, {"tow", tow ? "1" : "0"}});
  rt.last_outcome = Outcome::Executed;
}

void Simulation::execute(ModuleId m, const Action& action, ModuleRuntime& rt) {
  auto& st = fleet_.state(m);
  const auto& spec = fleet_.spec(m);
  rt.last_outcome = Outcome::Executed;

  if (const auto* drive = std::get_if<DriveAction>(&action)) {
    if (const Organism* org = organisms_.organism_containing(m)) {
      const auto r = organism_move(*org, fleet_, organism_command(drive->cmd), terrain_, config_.dt, config_.tariff);
      if (r.blocked) {
        rt.last_outcome = Outcome::Blocked;
        return;
      }
      for (const auto& [id, pose] : r.poses) fleet_.state(id).pose = pose;
      for (const auto& [id, md] : r.mass_distance) runtime_[id]->activity.mass_distance += md;
      return;
    }
    const auto r = locomotion_step(st, spec, drive->cmd, terrain_, config_.dt, config_.tariff);
    if (r.blocked) {
      rt.last_outcome = Outcome::Blocked;
      return;
    }
    st.pose = r.pose;
    rt.activity.mass_distance += r.distance * spec.mass;
  } else if (const auto* act = std::get_if<ActuateAction>(&action)) {
    double load = self_weight_torque(spec);
    if (const Organism* org = organisms_.organism_containing(m); org && spec.dof_bends(act->dof, st.joint_mode))
      load = std::max(load, front_lift_torque(*org, fleet_, m));
    const auto r = actuate_joint(st, spec, act->dof, act->target, config_.dt, load, config_.tariff);
    st.joint_angles[static_cast<std::size_t>(act->dof)] = r.angle;
    if (r.swept > 0 && load > spec.max_torque) ++stats_.over_torque;
    rt.activity.torque_angle += load * deg_to_rad(r.swept);
  } else if (const auto* dock = std::get_if<DockAction>(&action)) {
    execute_dock(m, {m, dock->face}, {dock->peer, dock->peer_face}, false, rt);
  } else if (const auto* tow = std::get_if<TowAction>(&action)) {
    const auto [mine, theirs] = tow_faces(st, fleet_.state(tow->target));
    execute_dock(m, {m, mine}, {tow->target, theirs}, true, rt);
  } else if (const auto* un = std::get_if<UndockAction>(&action)) {
    auto& port = st.port(un->face);
    const PortRef peer = *port.peer;
    auto& other = fleet_.state(peer.module).port(peer.face);
    const bool tow = port.tow;
    undock(port, other);
    const auto edge = DockEdge::make(port.ref(), peer);
    attempts_[edge] = {port.ref(), peer, tow, true, tick_};
    partner_[port.ref()] = peer;
    partner_[peer] = port.ref();
    emit(mid(m), "undock", {{"port", port_str(port.ref())}, {"peer", port_str(peer)}});
    if (organisms_.has_edge(edge)) emit_topology(organisms_.remove_edge(edge));
  } else if (const auto* rc = std::get_if<RechargeAction>(&action)) {
    recharge_requests_.emplace_back(m, rc->socket);
  } else if (std::holds_alternative<ToggleCoprocessorAction>(action)) {
    st.coprocessor_on = !st.coprocessor_on;
  }
}

void Simulation::act(ModuleId m, const Observation&) {
  auto& rt = *runtime_[m];
  auto& st = fleet_.state(m);
  const auto chosen = select_action(rt.output.proposals);
  ++stats_.selected;
  rt.last_action = action_name(chosen.action);
  rt.credit_source = {chosen.source == kNoController ? std::string("none") : rt.controller_names[chosen.source],
                      rt.last_action};

  GuardView view{fleet_, organisms_, terrain_, config_.dt, [this](PortRef p) { return attempt_partner(p); }};
  auto verdict = guard(chosen.action, st, view);
  if (const auto* rej = std::get_if<Rejected>(&verdict)) {
    ++stats_.rejected;
    rt.last_outcome = Outcome::Rejected;
    emit(mid(m), "reject",
         {{"action", std::string(rt.last_action)},
          {"reason", std::string(to_string(rej->reason))},
          {"controller", rt.credit_source.first}});
    return;
  }
  const Action& action = std::get<Action>(verdict);
  if (!(action == chosen.action)) ++stats_.clamped;
  ++stats_.executed;
  execute(m, action, rt);
}

void Simulation::phase_docking() {
  std::vector<DockEdge> keys;
  keys.reserve(attempts_.size());
  for (const auto& [e, at] : attempts_) keys.push_back(e);
  for (const auto& edge : keys) {
    auto& at = attempts_.at(edge);
    auto& sa = fleet_.state(at.a.module);
    auto& sb = fleet_.state(at.b.module);
    auto& pa = sa.port(at.a.face);
    auto& pb = sb.port(at.b.face);
    const DockPhase phase = pa.phase;
    const bool fresh = at.created == tick_;
    const bool touched = at.touched;
    at.touched = false;
    if (fresh && (phase == DockPhase::Approaching || phase == DockPhase::Unlocking)) continue;

    DockInput in{DockSignal::Proceed, false, at.tow, sa.health, sb.health};
    if (phase == DockPhase::Approaching || phase == DockPhase::Aligning) {
      const double edge_len = fleet_.spec(sa.id).edge_length;
      const bool aligned = attempt_align(sa.pose, at.a.face, sb.pose, at.b.face, tolerance_for(sa.cls, sb.cls),
                                         edge_len);
      if (!touched)
        in.signal = DockSignal::Abort;
      else if (aligned)
        in.signal = DockSignal::Aligned;
      else
        in.signal = phase == DockPhase::Approaching ? DockSignal::Approach : DockSignal::Proceed;
    } else if (phase == DockPhase::Separating) {
      const double edge_len = std::max(fleet_.spec(sa.id).edge_length, fleet_.spec(sb.id).edge_length);
      const Vec2 ca = face_center(sa.pose, at.a.face, fleet_.spec(sa.id).edge_length);
      const Vec2 cb = face_center(sb.pose, at.b.face, fleet_.spec(sb.id).edge_length);
      in.separation_clear = (ca - cb).norm() >= edge_len - 1e-12;
    }
    const auto step = advance_dock(pa, pb, in);
    const std::string who = mid(at.a.module);
    if (step.locked) {
      emit(who, "dock_lock", {{"port", port_str(at.a)}, {"peer", port_str(at.b)}});
      for (auto* s : {&sa, &sb})
        if (s->alive()) ++runtime_[s->id]->activity.locks;
    }
    if (step.docked) {
      emit(who, "dock_docked", {{"port", port_str(at.a)}, {"peer", port_str(at.b)}, {"tow", at.tow ? "1" : "0"}});
      emit_topology(organisms_.register_edge(pa, pb));
    }
    if (step.separated) emit(who, "dock_separated", {{"port", port_str(at.a)}, {"peer", port_str(at.b)}});
    if (pa.phase == DockPhase::Free && !step.separated)
      emit(who, "dock_abort",
           {{"port", port_str(at.a)}, {"peer", port_str(at.b)}, {"reason", step.death_abort ? "death" : "untouched"}});
    if (pa.phase == DockPhase::Free || pa.phase == DockPhase::Docked) {
      partner_.erase(at.a);
      partner_.erase(at.b);
      attempts_.erase(edge);
    }
  }
}

void Simulation::kill(ModuleId m, Health cause) {
  auto& st = fleet_.state(m);
  st.health = cause;
  st.coprocessor_on = false;
  emit(mid(m), "death", {{"cause", cause == Health::EnergyDead ? "energy" : "hardware"}});
}

void Simulation::phase_energy() {
  for (auto& st : fleet_.states) {
    if (!st.alive()) continue;
    auto& rt = *runtime_[st.id];
    const auto r = consume(st, rt.activity, config_.dt, config_.tariff, ledger_);
    rt.activity = {};
    if (r.died) kill(st.id, Health::EnergyDead);
  }
  for (const auto& [m, sid] : recharge_requests_) {
    auto& st = fleet_.state(m);
    auto& rt = *runtime_[m];
    if (!st.alive()) continue;
    const auto& sockets = arena_.sockets();
    auto it = std::find_if(sockets.begin(), sockets.end(), [&](const Socket& s) { return s.id == sid; });
    if (it == sockets.end()) {
      rt.last_outcome = Outcome::Refused;
      emit(mid(m), "recharge_refused", {{"socket", std::to_string(sid)}, {"status", "unknown"}});
      continue;
    }
    double reach = fleet_.spec(m).edge_length;
    bool touches = arena_.cell_of(st.pose.position()) == it->anchor;
    if (const Organism* org = organisms_.organism_containing(m)) {
      reach = organism_reach(*org);
      touches = std::any_of(org->nodes.begin(), org->nodes.end(), [&](ModuleId n) {
        return arena_.cell_of(fleet_.state(n).pose.position()) == it->anchor;
      });
    }
    const auto out = recharge(st, fleet_.spec(m), *it, recharge_access(reach, *it, touches), config_.dt,
                              config_.tariff, ledger_);
    if (out.refused()) {
      rt.last_outcome = Outcome::Refused;
      emit(mid(m), "recharge_refused", {{"socket", std::to_string(sid)}, {"status", std::string(to_string(out.status))}});
    }
  }
  recharge_requests_.clear();
  if (config_.share_rate > 0)
    for (const auto& [id, org] : organisms_.all()) share_energy(org, fleet_, config_.dt, config_.share_rate);
  ledger_.snapshot(fleet_);
}

void Simulation::phase_hazard() {
  if (hazard_p_ <= 0) return;
  for (auto& st : fleet_.states)
    if (st.alive() && hazard_rng_.bernoulli(hazard_p_)) kill(st.id, Health::HardwareDead);
}

void Simulation::day_snapshot(std::uint64_t day_index) {
  double sum = 0;
  std::uint32_t alive = 0;
  for (const auto& st : fleet_.states) {
    if (st.alive()) {
      sum += st.battery / fleet_.spec(st.id).battery_capacity;
      ++alive;
    }
    auto& rt = *runtime_[st.id];
    for (const auto& [key, c] : rt.credit)
      emit(mid(st.id), "credit",
           {{"controller", key.first}, {"action", std::string(key.second)}, {"n", std::to_string(c.first)},
            {"dfit", fmt(c.second)}});
    rt.credit.clear();
  }
  const double mean = fleet_.size() ? sum / static_cast<double>(fleet_.size()) : 0.0;
  const std::size_t open = arena_.open_cell_count();
  emit("run", "day",
       {{"index", std::to_string(day_index)},
        {"mean_battery", fmt(mean)},
        {"coverage", fmt(open ? static_cast<double>(covered_count_) / static_cast<double>(open) : 0.0)},
        {"survivors", std::to_string(alive)}});
}

void Simulation::phase_metrics() {
  for (const auto& st : fleet_.states) {
    if (st.alive() || disposed_.count(st.id)) continue;
    if (in_graveyard(arena_, st.pose)) {
      disposed_.insert(st.id);
      emit(mid(st.id), "disposed");
    }
  }
  for (const auto& st : fleet_.states) {
    auto& rt = *runtime_[st.id];
    const auto load = bus_.bus_load(st.id);
    if (load != rt.logged_bus_load) {
      emit(mid(st.id), "busload", {{"dropped", std::to_string(load - rt.logged_bus_load)}, {"total", std::to_string(load)}});
      rt.logged_bus_load = load;
    }
  }
  if ((tick_ + 1) % config_.ticks_per_day == 0) day_snapshot((tick_ + 1) / config_.ticks_per_day - 1);
  if (options_.check_invariants) {
    check_invariants();
    last_health_.resize(fleet_.size(), Health::Ok);
    for (const auto& st : fleet_.states) {
      if (last_health_[st.id] != Health::Ok && st.health != last_health_[st.id])
        throw InvariantBreach(tick_, "death_latched", mid(st.id) + " left its death state");
      last_health_[st.id] = st.health;
    }
  }
}

void Simulation::step() {
  if (done()) throw Error("simulation already finished");
  if (result_) throw Error("simulation already closed");
  reach_cache_.clear();
  phase_schedule();
  bus_.advance(tick_);

  const std::size_t n = fleet_.size();
  std::vector<std::optional<Observation>> obs(n);
  for (ModuleId m = 0; m < n; ++m) {
    if (fleet_.state(m).alive())
      obs[m] = sense(m);
    else
      bus_.collect(m);
  }
  for (ModuleId m = 0; m < n; ++m) {
    auto& rt = *runtime_[m];
    rt.output = {};
    if (!obs[m]) continue;
    rt.output = step_controllers(*obs[m], rt.controllers, options_.proposal_budget);
    for (auto& [to, payload] : rt.output.outbox) {
      if (const auto* st = std::get_if<StatusPayload>(&payload)) rt.memory.record_status(m, *st, tick_);
      if (to == kBroadcast) {
        for (ModuleId r = 0; r < n; ++r)
          if (r != m && bus_.reachable(organisms_, fleet_, m, r)) bus_.send(organisms_, fleet_, {m, r, tick_, payload}, tick_);
      } else {
        bus_.send(organisms_, fleet_, {m, to, tick_, std::move(payload)}, tick_);
      }
    }
  }
  for (ModuleId m = 0; m < n; ++m) {
    if (!obs[m] || !fleet_.state(m).alive()) {
      runtime_[m]->last_outcome = Outcome::None;
      continue;
    }
    act(m, *obs[m]);
  }
  phase_docking();
  phase_energy();
  phase_hazard();
  phase_metrics();
  ++tick_;
}

RunMetrics Simulation::finish() {
  if (result_) return *result_;
  if (tick_ % config_.ticks_per_day != 0) day_snapshot(tick_ / config_.ticks_per_day);
  emit("run", "ledger",
       {{"efficiency", fmt(ledger_.efficiency)},
        {"initial", fmt(ledger_.initial_stored)},
        {"drawn", fmt(ledger_.drawn)},
        {"consumed", fmt(ledger_.consumed)},
        {"stored", fmt(ledger_.stored)},
        {"residual", fmt(ledger_.residual())}});
  for (const auto& st : fleet_.states)
    if (!st.alive() && !disposed_.count(st.id)) emit(mid(st.id), "task_open", {{"task", "dispose"}});
  log_.close(tick_, tick_);
  result_ = metrics_.result(tick_, hex_digest(log_.digest()));
  return *result_;
}

RunMetrics Simulation::run() {
  while (!done()) step();
  return finish();
}

// --------------------------------------------------------------- invariants

void Simulation::check_invariants() const {
  auto breach = [&](const char* name, const std::string& detail) { throw InvariantBreach(tick_, name, detail); };
  for (const auto& st : fleet_.states) {
    const auto& spec = fleet_.spec(st.id);
    if (!(st.battery >= 0 && st.battery <= spec.battery_capacity))
      breach("battery_bounds", mid(st.id) + " battery " + fmt(st.battery));
    for (int d = 0; d < spec.dof_count; ++d)
      if (std::abs(st.joint_angles[static_cast<std::size_t>(d)]) > spec.dof_limit(d) + 1e-9)
        breach("joint_range", mid(st.id) + " dof " + std::to_string(d));
    const auto t = arena_.terrain_at(st.pose.position());
    if (!t || *t == TerrainClass::Obstacle) breach("pose_in_arena", mid(st.id) + " at an obstacle or off the grid");
    for (const auto& p : st.ports) {
      if (p.phase == DockPhase::Free) {
        if (p.peer) breach("port_pairing", port_str(p.ref()) + " is Free with a peer");
        continue;
      }
      if (p.phase == DockPhase::Approaching || p.phase == DockPhase::Aligning || p.phase == DockPhase::Separating) {
        if (!partner_.count(p.ref())) breach("port_pairing", port_str(p.ref()) + " has no attempt");
        const auto q = partner_.at(p.ref());
        if (!legal_pairing(p, fleet_.state(q.module).port(q.face)))
          breach("port_pairing", port_str(p.ref()) + " / " + port_str(q));
        continue;
      }
      if (!p.peer) breach("port_pairing", port_str(p.ref()) + " latched without a peer");
      const auto& q = fleet_.state(p.peer->module).port(p.peer->face);
      if (!legal_pairing(p, q)) breach("port_pairing", port_str(p.ref()) + " / " + port_str(q.ref()));
      if (p.phase == DockPhase::Docked && !organisms_.has_edge(DockEdge::make(p.ref(), q.ref())))
        breach("topology", port_str(p.ref()) + " Docked but not in any organism");
    }
  }
  for (const auto& [id, org] : organisms_.all())
    for (const auto& e : org.edges) {
      const auto& p = fleet_.state(e.a.module).port(e.a.face);
      if (p.phase != DockPhase::Docked) breach("topology", "organism edge on a port that is not Docked");
    }
  if (stats_.over_torque > 0)
    breach("torque_limit", std::to_string(stats_.over_torque) + " actuations above the joint's torque rating");
  const double hours = static_cast<double>(tick_ + 1) * config_.dt / 3600.0;
  if (std::abs(ledger_.residual()) > 1e-6 * std::max(1.0, hours))
    breach("ledger_conservation", "residual " + fmt(ledger_.residual()) + " J");
}

}  // namespace orgsim
