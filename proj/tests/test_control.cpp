#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <type_traits>

#include "orgsim/baseline_controllers.hpp"
#include "orgsim/control.hpp"
#include "orgsim/error.hpp"
#include "orgsim/navigation.hpp"
#include "orgsim/rng.hpp"

using namespace orgsim;

namespace {

/// A 10x10 room with a wall at x = 5 (cells 5, all rows but the last).
TerrainLookup room() {
  return {[](const Vec2& p) -> std::optional<TerrainClass> {
            if (p.x() < 0 || p.y() < 0 || p.x() >= 1.0 || p.y() >= 1.0) return std::nullopt;
            const int cx = static_cast<int>(p.x() / 0.1);
            return cx == 5 ? TerrainClass::Obstacle : TerrainClass::Plain;
          },
          0.1};
}

struct World {
  Fleet fleet;
  OrganismSet orgs;

  GuardView view() const { return {fleet, orgs, room(), 1.0, {}}; }
  void dock(PortRef x, PortRef y) {
    auto& a = fleet.state(x.module).port(x.face);
    auto& b = fleet.state(y.module).port(y.face);
    a.phase = b.phase = DockPhase::Docked;
    a.peer = y;
    b.peer = x;
    orgs.register_edge(a, b);
  }
};

class Fixed : public Controller {
 public:
  Fixed(std::uint8_t prio, Action a, int count = 1) : prio_(prio), action_(a), count_(count) {}
  std::string_view name() const override { return "fixed"; }
  void step(const Observation&, ControllerContext& ctx) override {
    for (int i = 0; i < count_; ++i) ctx.propose(prio_, action_);
  }

 private:
  std::uint8_t prio_;
  Action action_;
  int count_;
};

ControllerSlot slot(std::unique_ptr<Controller> c) { return {std::move(c), Rng(1)}; }

}  // namespace

TEST_CASE("select_action") {
  const ActionProposal stop{0, 0, IdleAction{}};
  const ActionProposal move{1, 10, DriveAction{{1, 0, 0}}};
  std::vector<ActionProposal> both{move, stop};
  CHECK(select_action(both) == stop);
  std::vector<ActionProposal> one{move};
  CHECK(select_action(one) == move);

  const ActionProposal c1{0, 50, DriveAction{{1, 0, 0}}};
  const ActionProposal c2{1, 50, DriveAction{{-1, 0, 0}}};
  std::vector<ActionProposal> tie{c2, c1};
  CHECK(select_action(tie) == c1);

  const auto idle = select_action({});
  CHECK(std::holds_alternative<IdleAction>(idle.action));
  CHECK(idle.source == kNoController);

  SUBCASE("property: invariant under permutation of the list") {
    Rng rng(12);
    for (int i = 0; i < 500; ++i) {
      std::vector<ActionProposal> ps;
      const auto n = rng.uniform_int(1, 6);
      for (std::uint32_t k = 0; k < n; ++k)
        ps.push_back({k, static_cast<std::uint8_t>(rng.uniform_int(0, 3) * 40), ActuateAction{0, double(k)}});
      const auto expected = select_action(ps);
      for (int j = 0; j < 5; ++j) {
        for (std::size_t a = ps.size(); a > 1; --a) std::swap(ps[a - 1], ps[rng.uniform_int(0, a - 1)]);
        REQUIRE(select_action(ps) == expected);
      }
    }
  }
}

TEST_CASE("step_controllers") {
  Observation obs;
  obs.battery_fraction = 1.0;
  SUBCASE("none registered") { CHECK(step_controllers(obs, {}).proposals.empty()); }
  SUBCASE("registration order") {
    std::vector<ControllerSlot> slots;
    slots.push_back(slot(std::make_unique<Fixed>(100, IdleAction{})));
    slots.push_back(slot(std::make_unique<Fixed>(5, ToggleCoprocessorAction{})));
    const auto out = step_controllers(obs, slots);
    REQUIRE(out.proposals.size() == 2);
    CHECK(out.proposals[0].source == 0);
    CHECK(out.proposals[1].source == 1);
  }
  SUBCASE("budget") {
    std::vector<ControllerSlot> slots;
    slots.push_back(slot(std::make_unique<Fixed>(100, IdleAction{}, 2)));
    CHECK_THROWS_AS(step_controllers(obs, slots), FrameworkError);
    CHECK(step_controllers(obs, slots, 2).proposals.size() == 2);
  }
  SUBCASE("dead modules do not think") {
    obs.health = Health::HardwareDead;
    CHECK_THROWS_AS(step_controllers(obs, {}), ArgumentError);
  }
  SUBCASE("critical battery asks for a recharge at priority 10") {
    obs.battery_fraction = 0.15;
    obs.spec = make_module_spec(ModuleClass::Scout);
    SensedSocket s;
    s.id = 3;
    s.active = true;
    s.position = Vec2(1.0, 0.0);
    obs.sockets.push_back(s);
    std::vector<ControllerSlot> slots;
    slots.push_back(slot(make_builtin_controller("seek_energy")));
    const auto out = step_controllers(obs, slots);
    REQUIRE(out.proposals.size() == 1);
    CHECK(out.proposals[0].priority == priority::kCriticalEnergy);
    CHECK(out.proposals[0].action == Action{RechargeAction{3}});
  }
}

TEST_CASE("observation is sealed from the world") {
  // Controllers receive values and their own context only.
  static_assert(std::is_same_v<decltype(&Controller::step), void (Controller::*)(const Observation&, ControllerContext&)>);
  static_assert(!std::is_constructible_v<Observation, const Fleet&>);
  CHECK(builtin_controller_names().size() == 4);
  for (auto n : builtin_controller_names()) CHECK(make_builtin_controller(n) != nullptr);
  CHECK(make_builtin_controller("evolve") == nullptr);
}

TEST_CASE("guard") {
  World w;
  const auto scout = w.fleet.add(make_module_spec(ModuleClass::Scout), {0.25, 0.25, 0});
  const auto& st = w.fleet.state(scout);

  SUBCASE("bend beyond range is clamped") {
    const auto r = guard(ActuateAction{0, 120}, st, w.view());
    REQUIRE(std::holds_alternative<Action>(r));
    CHECK(std::get<Action>(r) == Action{ActuateAction{0, 90}});
  }
  SUBCASE("drive into a wall") {
    w.fleet.state(scout).pose = {0.44, 0.25, 0};
    const auto r = guard(DriveAction{{1, 0, 0}}, w.fleet.state(scout), w.view());
    REQUIRE(std::holds_alternative<Rejected>(r));
    CHECK(std::get<Rejected>(r).reason == RejectReason::Collision);
  }
  SUBCASE("legal drive passes unchanged") {
    const Action a = DriveAction{{0.5, 0, 0.2}};
    const auto r = guard(a, st, w.view());
    REQUIRE(std::holds_alternative<Action>(r));
    CHECK(std::get<Action>(r) == a);
  }
  SUBCASE("off the arena") {
    w.fleet.state(scout).pose = {0.05, 0.05, 180};
    CHECK(std::get<Rejected>(guard(DriveAction{{1, 0, 0}}, w.fleet.state(scout), w.view())).reason ==
          RejectReason::Collision);
  }
  SUBCASE("tracked drive sideways") {
    CHECK(std::get<Rejected>(guard(DriveAction{{0, 1, 0}}, st, w.view())).reason == RejectReason::InvalidCommand);
  }
  SUBCASE("unknown dof") {
    CHECK(std::get<Rejected>(guard(ActuateAction{5, 0}, st, w.view())).reason == RejectReason::InvalidCommand);
  }
  SUBCASE("undock a free port") {
    CHECK(std::get<Rejected>(guard(UndockAction{Face::North}, st, w.view())).reason == RejectReason::Protocol);
  }
  SUBCASE("dock rules") {
    const auto other = w.fleet.add(make_module_spec(ModuleClass::Scout), {0.25, 0.35, 0});
    CHECK(std::holds_alternative<Action>(guard(DockAction{Face::North, other, Face::South}, w.fleet.state(scout), w.view())));
    CHECK(std::get<Rejected>(guard(DockAction{Face::North, 99, Face::South}, w.fleet.state(scout), w.view())).reason ==
          RejectReason::Protocol);
    w.fleet.state(other).health = Health::EnergyDead;
    CHECK(std::get<Rejected>(guard(DockAction{Face::North, other, Face::South}, w.fleet.state(scout), w.view()))
              .reason == RejectReason::Protocol);
    CHECK(std::holds_alternative<Action>(guard(TowAction{other}, w.fleet.state(scout), w.view())));
  }
  SUBCASE("a docked port forbids a second dock") {
    const auto a = w.fleet.add(make_module_spec(ModuleClass::Scout), {0.25, 0.35, 0});
    const auto b = w.fleet.add(make_module_spec(ModuleClass::Scout), {0.35, 0.25, 0});
    w.dock({scout, Face::North}, {a, Face::South});
    CHECK(std::get<Rejected>(guard(DockAction{Face::North, b, Face::West}, w.fleet.state(scout), w.view())).reason ==
          RejectReason::Protocol);
  }
  SUBCASE("lifting too much is an overload") {
    // A scout at the end of a chain of three must hold 5.886 N*m > 3.
    World c;
    const auto base = c.fleet.add(make_module_spec(ModuleClass::Scout), {0.15, 0.15, 90});
    ModuleId prev = base;
    for (int k = 1; k <= 3; ++k) {
      const auto m = c.fleet.add(make_module_spec(ModuleClass::Scout), {0.15, 0.15 + 0.1 * k, 90});
      c.dock({prev, Face::North}, {m, Face::South});
      prev = m;
    }
    const auto r = guard(ActuateAction{0, 45}, c.fleet.state(base), c.view());
    REQUIRE(std::holds_alternative<Rejected>(r));
    CHECK(std::get<Rejected>(r).reason == RejectReason::Overload);
    // Rotation does not lift.
    CHECK(std::holds_alternative<Action>(guard(ActuateAction{1, 45}, c.fleet.state(base), c.view())));
  }
  SUBCASE("only the leader drives an organism") {
    const auto a = w.fleet.add(make_module_spec(ModuleClass::Scout), {0.25, 0.35, 0});
    w.dock({scout, Face::North}, {a, Face::South});
    CHECK(std::get<Rejected>(guard(DriveAction{{1, 0, 0}}, w.fleet.state(a), w.view())).reason ==
          RejectReason::Protocol);
    CHECK(std::holds_alternative<Action>(guard(DriveAction{{0.2, 0, 0}}, w.fleet.state(scout), w.view())));
  }
}

TEST_CASE("message bus") {
  World w;
  const auto a = w.fleet.add(make_module_spec(ModuleClass::Scout), {0, 0, 0});
  const auto b = w.fleet.add(make_module_spec(ModuleClass::Scout), {0.1, 0, 0});
  const auto far = w.fleet.add(make_module_spec(ModuleClass::Scout), {100, 0, 0});
  MessageBus bus(64, 2.0);

  SUBCASE("delivered next tick, not before") {
    bus.advance(1);
    CHECK(bus.send(w.orgs, w.fleet, {a, b, 0, std::string("hi")}, 1) == MessageBus::SendResult::Queued);
    CHECK(bus.collect(b).empty());
    bus.advance(2);
    const auto got = bus.collect(b);
    REQUIRE(got.size() == 1);
    CHECK(got[0].sent_tick == 1);
    CHECK(std::get<std::string>(got[0].payload) == "hi");
  }
  SUBCASE("out of radio range and not docked") {
    CHECK(bus.send(w.orgs, w.fleet, {a, far, 0, std::string("x")}, 1) == MessageBus::SendResult::Refused);
  }
  SUBCASE("same organism reaches any distance") {
    w.fleet.state(far).pose = {0.2, 0, 0};
    w.dock({b, Face::East}, {far, Face::West});
    w.dock({a, Face::East}, {b, Face::West});
    w.fleet.state(far).pose = {100, 0, 0};
    CHECK(bus.send(w.orgs, w.fleet, {a, far, 0, std::string("x")}, 1) == MessageBus::SendResult::Queued);
  }
  SUBCASE("65 sends: 64 delivered, 1 dropped") {
    bus.advance(1);
    int queued = 0, dropped = 0;
    for (int i = 0; i < 65; ++i) {
      const auto r = bus.send(w.orgs, w.fleet, {a, b, 0, std::to_string(i)}, 1);
      queued += r == MessageBus::SendResult::Queued;
      dropped += r == MessageBus::SendResult::Dropped;
    }
    CHECK(queued == 64);
    CHECK(dropped == 1);
    CHECK(bus.bus_load(b) == 1);
    bus.advance(2);
    const auto got = bus.collect(b);
    REQUIRE(got.size() == 64);
    CHECK(std::get<std::string>(got.back().payload) == "63");  // the newest was dropped
  }
  SUBCASE("dead modules are unreachable") {
    w.fleet.state(b).health = Health::HardwareDead;
    CHECK(bus.send(w.orgs, w.fleet, {a, b, 0, std::string("x")}, 1) == MessageBus::SendResult::Refused);
  }
}

TEST_CASE("fitness") {
  ModuleMemory mem(10, 10);
  Observation obs;
  obs.battery_fraction = 1.0;
  SensedSocket s;
  s.active = true;
  s.position = Vec2(3.0, 4.0);
  obs.sockets.push_back(s);
  auto f = fitness(obs, mem);
  CHECK(f.global_approx == 0.0);
  CHECK(f.local == doctest::Approx(1.0 / 6.0));
  CHECK(f.interaction == 0.0);
  CHECK(f.internal == 1.0);

  for (auto& p : obs.ports) p.phase = DockPhase::Docked;
  obs.battery_fraction = 0.0;
  f = fitness(obs, mem);
  CHECK(f.interaction == 1.0);
  CHECK(f.internal == 0.0);

  obs.cell = {2, 2};
  mem.integrate(obs);
  CHECK(fitness(obs, mem).global_approx == doctest::Approx(0.01));
}

TEST_CASE("crew geometry") {
  CHECK(crew_length(0.35, 0.1) == 4);
  CHECK(crew_length(0.30, 0.1) == 3);
  CHECK(crew_length(0.0, 0.1) == 1);
  SensedSocket s;
  s.position = Vec2(0.15, 1.45);
  s.wall_normal = Vec2(1, 0);
  const Pose p0 = crew_slot_pose(s, 0, 0.1);
  const Pose p2 = crew_slot_pose(s, 2, 0.1);
  CHECK(p0.position().isApprox(s.position));
  CHECK(p2.x == doctest::Approx(0.35));
  CHECK(p0.heading == doctest::Approx(180.0));  // North face looks at the wall
  // Neighbouring slots dock North to South.
  const Pose p1 = crew_slot_pose(s, 1, 0.1);
  CHECK(attempt_align(p1, Face::North, p0, Face::South, AlignmentTolerance::accurate()));
}

TEST_CASE("grid planner") {
  ModuleMemory mem(10, 10);
  Observation obs;
  for (int x = 0; x < 10; ++x)
    for (int y = 0; y < 10; ++y)
      obs.terrain.push_back({{x, y}, (x == 5 && y < 9) ? TerrainClass::Obstacle : TerrainClass::Plain});
  mem.integrate(obs);
  const auto path = grid_path(10, 10, {1, 1}, known_passable(mem, ModuleClass::Backbone),
                              [](CellIndex c) { return c == CellIndex{8, 1}; }, {8, 1}, true);
  REQUIRE(path);
  CHECK(path->front() == CellIndex{1, 1});
  CHECK(path->back() == CellIndex{8, 1});
  for (const auto& c : *path) CHECK(mem.known(c) != TerrainClass::Obstacle);
  CHECK(std::any_of(path->begin(), path->end(), [](CellIndex c) { return c.y == 9; }));
}
