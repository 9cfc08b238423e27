#include "orgsim/organism.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>

#include "orgsim/error.hpp"

namespace orgsim {

std::string_view to_string(TopologyEvent::Kind k) {
  using K = TopologyEvent::Kind;
  switch (k) {
    case K::Formed: return "formed";
    case K::Grown: return "grown";
    case K::Linked: return "linked";
    case K::Merged: return "merged";
    case K::Unlinked: return "unlinked";
    case K::Split: return "split";
    case K::Dissolved: return "dissolved";
  }
  return "?";
}

std::vector<ModuleId> Organism::neighbours(ModuleId m) const {
  std::vector<ModuleId> out;
  for (const auto& e : edges) {
    if (e.a.module == m) out.push_back(e.b.module);
    else if (e.b.module == m) out.push_back(e.a.module);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

std::vector<ModuleId> as_vector(const std::set<ModuleId>& s) { return {s.begin(), s.end()}; }

std::set<ModuleId> component(ModuleId start, const std::set<DockEdge>& edges) {
  std::set<ModuleId> seen{start};
  std::deque<ModuleId> q{start};
  while (!q.empty()) {
    const ModuleId m = q.front();
    q.pop_front();
    for (const auto& e : edges) {
      if (e.a.module != m && e.b.module != m) continue;
      const ModuleId n = e.other(m);
      if (seen.insert(n).second) q.push_back(n);
    }
  }
  return seen;
}

}  // namespace

std::vector<TopologyEvent> OrganismSet::register_edge(const DockPort& a, const DockPort& b) {
  if (a.phase != DockPhase::Docked || b.phase != DockPhase::Docked)
    throw ProtocolError("register_edge requires two docked ports");
  if (a.peer != b.ref() || b.peer != a.ref()) throw ProtocolError("register_edge: ports are not mutually peered");
  const DockEdge edge = DockEdge::make(a.ref(), b.ref());
  if (has_edge(edge)) throw ProtocolError("register_edge: edge already registered");

  const auto oa = organism_of(a.owner);
  const auto ob = organism_of(b.owner);
  using K = TopologyEvent::Kind;

  if (!oa && !ob) {
    Organism o;
    o.id = fresh_id();
    o.nodes = {a.owner, b.owner};
    o.edges = {edge};
    membership_[a.owner] = membership_[b.owner] = o.id;
    auto nodes = as_vector(o.nodes);
    const auto id = o.id;
    organisms_.emplace(id, std::move(o));
    return {{K::Formed, id, std::nullopt, std::move(nodes)}};
  }
  if (oa && ob && *oa == *ob) {
    auto& o = organisms_.at(*oa);
    o.edges.insert(edge);
    return {{K::Linked, o.id, std::nullopt, as_vector(o.nodes)}};
  }
  if (oa && ob) {
    const OrganismId keep = std::min(*oa, *ob);
    const OrganismId gone = std::max(*oa, *ob);
    auto& k = organisms_.at(keep);
    auto& g = organisms_.at(gone);
    for (ModuleId m : g.nodes) membership_[m] = keep;
    k.nodes.insert(g.nodes.begin(), g.nodes.end());
    k.edges.insert(g.edges.begin(), g.edges.end());
    k.edges.insert(edge);
    organisms_.erase(gone);
    return {{K::Merged, keep, gone, as_vector(k.nodes)}};
  }
  const OrganismId id = oa ? *oa : *ob;
  const ModuleId joiner = oa ? b.owner : a.owner;
  auto& o = organisms_.at(id);
  o.nodes.insert(joiner);
  o.edges.insert(edge);
  membership_[joiner] = id;
  return {{K::Grown, id, std::nullopt, as_vector(o.nodes)}};
}

std::vector<TopologyEvent> OrganismSet::remove_edge(const DockEdge& edge) {
  const auto oid = organism_of(edge.a.module);
  if (!oid || !organisms_.at(*oid).edges.count(edge)) throw ArgumentError("remove_edge: unknown edge");
  using K = TopologyEvent::Kind;
  auto& o = organisms_.at(*oid);
  o.edges.erase(edge);

  auto first = component(*o.nodes.begin(), o.edges);
  if (first.size() == o.nodes.size()) return {{K::Unlinked, o.id, std::nullopt, as_vector(o.nodes)}};

  std::set<ModuleId> second;
  std::set_difference(o.nodes.begin(), o.nodes.end(), first.begin(), first.end(),
                      std::inserter(second, second.end()));
  // `first` holds the lowest node and keeps the id.
  auto edges_within = [&](const std::set<ModuleId>& nodes) {
    std::set<DockEdge> out;
    for (const auto& e : o.edges)
      if (nodes.count(e.a.module)) out.insert(e);
    return out;
  };
  std::vector<TopologyEvent> events;
  const OrganismId id = o.id;
  auto second_edges = edges_within(second);
  o.edges = edges_within(first);
  o.nodes = first;

  std::optional<OrganismId> spawned;
  if (second.size() >= 2) {
    Organism n;
    n.id = fresh_id();
    n.nodes = second;
    n.edges = std::move(second_edges);
    for (ModuleId m : second) membership_[m] = n.id;
    spawned = n.id;
    organisms_.emplace(n.id, std::move(n));
  } else {
    for (ModuleId m : second) membership_.erase(m);
  }

  if (first.size() >= 2) {
    events.push_back({K::Split, id, spawned, as_vector(first)});
  } else {
    for (ModuleId m : first) membership_.erase(m);
    organisms_.erase(id);
    events.push_back({K::Dissolved, id, spawned, {}});
  }
  if (spawned) events.push_back({K::Formed, *spawned, std::nullopt, as_vector(second)});
  return events;
}

std::optional<OrganismId> OrganismSet::organism_of(ModuleId m) const {
  auto it = membership_.find(m);
  if (it == membership_.end()) return std::nullopt;
  return it->second;
}

const Organism* OrganismSet::find(OrganismId id) const {
  auto it = organisms_.find(id);
  return it == organisms_.end() ? nullptr : &it->second;
}

const Organism* OrganismSet::organism_containing(ModuleId m) const {
  const auto id = organism_of(m);
  return id ? find(*id) : nullptr;
}

bool OrganismSet::has_edge(const DockEdge& e) const {
  const auto* o = organism_containing(e.a.module);
  return o && o->edges.count(e);
}

Vec2 center_of_mass(const Eigen::Matrix2Xd& positions, const Eigen::VectorXd& masses) {
  if (positions.cols() == 0 || positions.cols() != masses.size())
    throw ArgumentError("center_of_mass needs a non-empty, matching set of positions and masses");
  const double total = masses.sum();
  if (!(total > 0.0)) throw ArgumentError("center_of_mass: total mass must be positive");
  return positions * masses / total;
}

Vec2 center_of_mass(std::span<const ModuleId> members, const Fleet& fleet) {
  Eigen::Matrix2Xd p(2, static_cast<Eigen::Index>(members.size()));
  Eigen::VectorXd m(static_cast<Eigen::Index>(members.size()));
  for (Eigen::Index i = 0; i < p.cols(); ++i) {
    const ModuleId id = members[static_cast<std::size_t>(i)];
    p.col(i) = fleet.state(id).pose.position();
    m(i) = fleet.spec(id).mass;
  }
  return center_of_mass(p, m);
}

Vec2 center_of_mass(const Organism& org, const Fleet& fleet) {
  const auto nodes = as_vector(org.nodes);
  return center_of_mass(std::span<const ModuleId>(nodes), fleet);
}

double required_lift_torque(std::span<const ModuleId> chain, const Fleet& fleet) {
  double arm = 0.0;
  double torque = 0.0;
  for (ModuleId m : chain) {
    const auto& s = fleet.spec(m);
    arm += s.edge_length;
    torque += s.mass * kGravity * arm;
  }
  return torque;
}

bool lift_feasible(const LiftQuery& query, const Fleet& fleet) {
  const auto& pivot = fleet.spec(query.pivot);
  if (query.dof < 0 || query.dof >= pivot.dof_count)
    throw ArgumentError("lift pivot dof " + std::to_string(query.dof) + " invalid for " +
                        std::string(to_string(pivot.cls)));
  if (!pivot.dof_bends(query.dof, fleet.state(query.pivot).joint_mode)) return query.chain.empty();
  return required_lift_torque(query.chain, fleet) <= pivot.max_torque;
}

bool lift_feasible(const LiftQuery& query, const Fleet& fleet, const OrganismSet& organisms) {
  const Organism* o = organisms.organism_containing(query.pivot);
  ModuleId prev = query.pivot;
  for (ModuleId m : query.chain) {
    const auto n = o ? o->neighbours(prev) : std::vector<ModuleId>{};
    if (std::find(n.begin(), n.end(), m) == n.end())
      throw ArgumentError("lift chain is not a docked path at module " + std::to_string(m));
    prev = m;
  }
  return lift_feasible(query, fleet);
}

double reach_height(const LiftQuery& stack, const Fleet& fleet) {
  const double base = fleet.spec(stack.pivot).edge_length;
  if (!lift_feasible(stack, fleet)) return base;
  double h = base;
  for (ModuleId m : stack.chain) h += fleet.spec(m).edge_length;
  return h;
}

double reach_height(const Organism& org, const Fleet& fleet) {
  double best = 0.0;
  for (ModuleId base : org.nodes) best = std::max(best, fleet.spec(base).edge_length);

  std::vector<ModuleId> path;
  std::set<ModuleId> on_path;
  for (ModuleId base : org.nodes) {
    const auto& spec = fleet.spec(base);
    const auto& st = fleet.state(base);
    if (!st.alive() || !spec.dof_bends(0, st.joint_mode)) continue;
    on_path = {base};
    // Depth-first over simple paths; holding torque only grows with length.
    std::function<void(ModuleId, double, double, double)> extend = [&](ModuleId tip, double arm, double torque,
                                                                        double height) {
      best = std::max(best, height);
      for (ModuleId n : org.neighbours(tip)) {
        if (on_path.count(n)) continue;
        const auto& ns = fleet.spec(n);
        const double a = arm + ns.edge_length;
        const double t = torque + ns.mass * kGravity * a;
        if (t > spec.max_torque) continue;
        on_path.insert(n);
        extend(n, a, t, height + ns.edge_length);
        on_path.erase(n);
      }
    };
    extend(base, 0.0, 0.0, spec.edge_length);
  }
  return best;
}

std::vector<std::pair<ModuleId, int>> subtree_beyond(const Organism& org, const Fleet& fleet, ModuleId m, Face face) {
  const auto& port = fleet.state(m).port(face);
  std::vector<std::pair<ModuleId, int>> out;
  if (port.phase != DockPhase::Docked || !port.peer) return out;
  const DockEdge cut = DockEdge::make(port.ref(), *port.peer);
  if (!org.edges.count(cut)) return out;
  std::set<ModuleId> seen{m, port.peer->module};
  std::deque<std::pair<ModuleId, int>> q{{port.peer->module, 1}};
  while (!q.empty()) {
    auto [cur, depth] = q.front();
    q.pop_front();
    out.emplace_back(cur, depth);
    for (ModuleId n : org.neighbours(cur))
      if (seen.insert(n).second) q.emplace_back(n, depth + 1);
  }
  return out;
}

double front_lift_torque(const Organism& org, const Fleet& fleet, ModuleId m) {
  const double edge = fleet.spec(m).edge_length;
  double torque = 0.0;
  for (auto [id, depth] : subtree_beyond(org, fleet, m, Face::North))
    torque += fleet.spec(id).mass * kGravity * depth * edge;
  return torque;
}

std::vector<ModuleId> ground_contact(const Organism& org, const Fleet& fleet) {
  std::vector<ModuleId> out;
  for (ModuleId m : org.nodes) {
    const auto& s = fleet.state(m);
    if (s.alive() && !s.carried) out.push_back(m);
  }
  return out;
}

bool is_scout_carry(const Organism& org, const Fleet& fleet) {
  int scouts = 0;
  for (ModuleId m : org.nodes) {
    const auto& s = fleet.state(m);
    const bool carried = s.carried || !s.alive();
    if (s.cls == ModuleClass::Scout && !carried) ++scouts;
    else if (s.cls != ModuleClass::Scout && !carried) return false;
  }
  return scouts >= 2;
}

std::optional<ModuleId> leader_of(const Organism& org, const Fleet& fleet) {
  for (ModuleId m : org.nodes)
    if (fleet.state(m).alive()) return m;
  return std::nullopt;
}

OrganismMoveResult organism_move(const Organism& org, const Fleet& fleet, const OrganismDriveCommand& cmd,
                                 const TerrainLookup& terrain, double dt, const Tariff& tariff) {
  if (!(dt > 0.0)) throw ArgumentError("dt must be positive");
  const auto ground = ground_contact(org, fleet);
  const auto leader = leader_of(org, fleet);
  if (ground.empty() || !leader) throw ArgumentError("organism has no operational ground-contact member");

  double speed = INFINITY;
  double turn = INFINITY;
  bool all_lateral = true;
  for (ModuleId m : ground) {
    const auto& s = fleet.spec(m);
    speed = std::min(speed, s.max_speed);
    turn = std::min(turn, s.max_turn_rate());
    all_lateral = all_lateral && s.drive != DriveKind::TrackedDifferential;
  }

  OrganismMoveResult r;
  const Vec2 com = center_of_mass(org, fleet);
  std::vector<std::vector<Vec2>> paths;  // per member, sampled path
  double theta = 0.0;
  Vec2 disp = Vec2::Zero();

  if (const auto* t = std::get_if<OrganismTranslate>(&cmd)) {
    if (t->lateral != 0.0 && !all_lateral && !is_scout_carry(org, fleet))
      throw InvalidCommandError("sideways organism motion needs lateral drives on every ground-contact member");
    Vec2 v(std::clamp(t->forward, -1.0, 1.0) * speed, std::clamp(t->lateral, -1.0, 1.0) * speed);
    if (const double n = v.norm(); n > speed) v *= speed / n;
    disp = body_to_world(fleet.state(*leader).pose.heading) * v * dt;
  } else {
    theta = std::clamp(std::get<OrganismTurn>(cmd).rate, -1.0, 1.0) * turn * dt;
  }

  const Eigen::Matrix2d rot = body_to_world(theta);
  double transported = 0.0;
  for (ModuleId m : org.nodes) {
    const auto& st = fleet.state(m);
    const Vec2 p0 = st.pose.position();
    Vec2 p1;
    std::vector<Vec2> samples{p0};
    if (theta == 0.0) {
      p1 = p0 + disp;
      samples.push_back(p1);
    } else {
      const Vec2 rel = p0 - com;
      p1 = com + rot * rel;
      const double arc = std::abs(deg_to_rad(theta)) * rel.norm();
      const int n = std::max(1, static_cast<int>(std::ceil(arc / (0.25 * terrain.resolution))));
      for (int i = 1; i <= n; ++i) samples.push_back(com + body_to_world(theta * i / n) * rel);
    }
    const bool carried = st.carried || !st.alive();
    for (std::size_t i = 1; i < samples.size(); ++i) {
      const auto pc = check_path(terrain, samples[i - 1], samples[i], st.cls, carried);
      if (!pc.clear) r.blocked = true;
      if (pc.hits_obstacle) r.hits_obstacle = true;
    }
    const double travelled = theta == 0.0 ? disp.norm() : std::abs(deg_to_rad(theta)) * (p0 - com).norm();
    transported += travelled * fleet.spec(m).mass;
    r.poses.emplace_back(m, Pose{p1.x(), p1.y(), normalize_heading(st.pose.heading + theta)});
  }

  double idle = 0.0;
  for (ModuleId m : org.nodes)
    if (fleet.state(m).alive()) idle += tariff.idle * dt;

  if (r.blocked) {
    r.poses.clear();
    for (ModuleId m : org.nodes) r.poses.emplace_back(m, fleet.state(m).pose);
    r.energy_cost = idle;
    return r;
  }
  for (ModuleId m : ground) r.mass_distance.emplace_back(m, transported / static_cast<double>(ground.size()));
  r.energy_cost = idle + tariff.locomotion * transported;
  return r;
}

}  // namespace orgsim
