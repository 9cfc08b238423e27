#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <optional>

#include "orgsim/docking.hpp"
#include "orgsim/error.hpp"
#include "orgsim/rng.hpp"

using namespace orgsim;

namespace {

std::pair<DockPort, DockPort> pair_in(DockPhase p, bool tow = false) {
  DockPort a, b;
  a.owner = 0;
  a.face = Face::North;
  b.owner = 1;
  b.face = Face::South;
  a.phase = b.phase = p;
  if (phase_has_peer(p)) {
    a.peer = b.ref();
    b.peer = a.ref();
    a.tow = b.tow = tow;
  }
  return {a, b};
}

/// Oracle: next phase for a legal pair with both modules alive, or nullopt if illegal.
std::optional<DockPhase> expected_next(DockPhase p, DockSignal s, bool clear) {
  using P = DockPhase;
  using S = DockSignal;
  switch (p) {
    case P::Free: return s == S::Approach ? P::Approaching : s == S::Aligned ? std::nullopt : std::optional(P::Free);
    case P::Approaching: return s == S::Aligned ? P::Aligning : s == S::Abort ? P::Free : P::Approaching;
    case P::Aligning:
      if (s == S::Approach) return std::nullopt;
      return s == S::Aligned ? P::Locking : s == S::Abort ? P::Free : P::Aligning;
    case P::Locking: return s == S::Proceed ? std::optional(P::Docked) : std::nullopt;
    case P::Docked: return s == S::Proceed ? std::optional(P::Docked) : std::nullopt;
    case P::Unlocking: return s == S::Proceed ? std::optional(P::Separating) : std::nullopt;
    case P::Separating:
      if (s != S::Proceed) return std::nullopt;
      return clear ? P::Free : P::Separating;
  }
  return std::nullopt;
}

Pose facing(const Pose& a, Face fa, double edge) {
  // The pose whose South face meets `a`'s `fa` face exactly.
  const double h = face_normal_heading(a, fa);
  const Vec2 c = a.position() + edge * unit_from_heading(h);
  return {c.x(), c.y(), h};
}

}  // namespace

TEST_CASE("alignment predicate") {
  const Pose a{1, 1, 0};
  const Pose b = facing(a, Face::North, 0.1);
  CHECK(attempt_align(a, Face::North, b, Face::South, AlignmentTolerance::accurate()));

  SUBCASE("inside the accurate box") {
    Pose c = b;
    c.heading += 3.0;
    // Move the face centre 5 mm sideways.
    const Vec2 side = unit_from_heading(face_normal_heading(a, Face::North) + 90.0) * 0.005;
    c.x += side.x();
    c.y += side.y();
    CHECK(attempt_align(a, Face::North, c, Face::South, AlignmentTolerance::accurate()));
  }
  SUBCASE("offset 3 cm fails") {
    Pose c = b;
    c.x += 0.03;
    CHECK_FALSE(attempt_align(a, Face::North, c, Face::South, AlignmentTolerance::accurate()));
  }
  SUBCASE("rough tolerance is looser") {
    Pose c = b;
    c.heading += 8.0;
    CHECK_FALSE(attempt_align(a, Face::North, c, Face::South, AlignmentTolerance::accurate()));
    CHECK(attempt_align(a, Face::North, c, Face::South, AlignmentTolerance::rough()));
    CHECK(tolerance_for(ModuleClass::Scout, ModuleClass::Backbone).max_heading_error == 10.0);
    CHECK(tolerance_for(ModuleClass::Backbone, ModuleClass::ActiveWheel).max_offset == 0.01);
  }
  SUBCASE("hermaphroditic: any face pair can align") {
    for (Face fa : kAllFaces)
      for (Face fb : kAllFaces) {
        const Pose base = facing(a, fa, 0.1);
        // Rotate the peer so that its fb face (not South) looks back at a.
        Pose p = base;
        p.heading = normalize_heading(face_normal_heading(a, fa) + 180.0 - face_normal_heading({0, 0, 0}, fb));
        CHECK(attempt_align(a, fa, p, fb, AlignmentTolerance::accurate()));
      }
  }
  CHECK_THROWS_AS(make_tolerance(0.0, 5.0), ArgumentError);
  CHECK_THROWS_AS(make_tolerance(0.01, -1.0), ArgumentError);
}

TEST_CASE("advance examples") {
  SUBCASE("aligning + aligned -> locking") {
    auto [a, b] = pair_in(DockPhase::Aligning);
    const auto s = advance_dock(a, b, {DockSignal::Aligned});
    CHECK(s.a == DockPhase::Locking);
    CHECK(s.b == DockPhase::Locking);
    CHECK(s.locked);
    CHECK(a.peer == b.ref());
    CHECK(b.peer == a.ref());
  }
  SUBCASE("docked + approach is a protocol error") {
    auto [a, b] = pair_in(DockPhase::Docked);
    CHECK_THROWS_AS(advance_dock(a, b, {DockSignal::Approach}), ProtocolError);
  }
  SUBCASE("approaching + abort -> free") {
    auto [a, b] = pair_in(DockPhase::Approaching);
    const auto s = advance_dock(a, b, {DockSignal::Abort});
    CHECK(s.a == DockPhase::Free);
    CHECK(s.b == DockPhase::Free);
  }
  SUBCASE("locking -> docked flags registration") {
    auto [a, b] = pair_in(DockPhase::Locking);
    CHECK(advance_dock(a, b, {DockSignal::Proceed}).docked);
  }
  SUBCASE("separation needs clearance") {
    auto [a, b] = pair_in(DockPhase::Separating);
    CHECK(advance_dock(a, b, {DockSignal::Proceed, false}).a == DockPhase::Separating);
    const auto s = advance_dock(a, b, {DockSignal::Proceed, true});
    CHECK(s.separated);
    CHECK(a.phase == DockPhase::Free);
  }
  SUBCASE("docking onto a dead module needs the tow flag") {
    auto [a, b] = pair_in(DockPhase::Free);
    CHECK_THROWS_AS(advance_dock(a, b, {DockSignal::Approach, false, false, Health::Ok, Health::HardwareDead}),
                    ProtocolError);
    CHECK(advance_dock(a, b, {DockSignal::Approach, false, true, Health::Ok, Health::HardwareDead}).a ==
          DockPhase::Approaching);
  }
  SUBCASE("death mid-dock aborts") {
    auto [a, b] = pair_in(DockPhase::Aligning);
    const auto s = advance_dock(a, b, {DockSignal::Aligned, false, false, Health::Ok, Health::EnergyDead});
    CHECK(s.death_abort);
    CHECK(a.phase == DockPhase::Free);
  }
  SUBCASE("same owner is never a legal pair") {
    auto [a, b] = pair_in(DockPhase::Free);
    b.owner = a.owner;
    CHECK_THROWS_AS(advance_dock(a, b, {DockSignal::Approach}), ProtocolError);
  }
}

TEST_CASE("exhaustive: advance matches the transition oracle") {
  for (auto p : kAllPhases)
    for (auto s : kAllSignals)
      for (bool clear : {false, true}) {
        auto [a, b] = pair_in(p);
        const auto want = expected_next(p, s, clear);
        CAPTURE(to_string(p));
        CAPTURE(to_string(s));
        if (!want) {
          CHECK_THROWS_AS(advance_dock(a, b, {s, clear}), ProtocolError);
          CHECK(a.phase == p);
          continue;
        }
        const auto step = advance_dock(a, b, {s, clear});
        CHECK(step.a == *want);
        CHECK(step.b == *want);
        CHECK(legal_pairing(a, b));
      }
  // Mismatched phases are rejected outright.
  for (auto pa : kAllPhases)
    for (auto pb : kAllPhases) {
      if (pa == pb) continue;
      auto [a, b] = pair_in(pa);
      b.phase = pb;
      for (auto s : kAllSignals) CHECK_THROWS_AS(advance_dock(a, b, {s}), ProtocolError);
    }
}

TEST_CASE("undock") {
  SUBCASE("one side unlocks both") {
    auto [a, b] = pair_in(DockPhase::Docked);
    const auto r = undock(a, b);
    CHECK(r.first == DockPhase::Unlocking);
    CHECK(r.second == DockPhase::Unlocking);
    CHECK(legal_pairing(a, b));
  }
  SUBCASE("free port") {
    auto [a, b] = pair_in(DockPhase::Free);
    CHECK_THROWS_AS(undock(a, b), ProtocolError);
  }
  SUBCASE("either side gives the same pair") {
    for (bool tow : {false, true}) {
      auto [a1, b1] = pair_in(DockPhase::Docked, tow);
      auto [a2, b2] = pair_in(DockPhase::Docked, tow);
      undock(a1, b1);
      undock(b2, a2);
      CHECK(a1.phase == a2.phase);
      CHECK(b1.phase == b2.phase);
      CHECK(a1.peer == a2.peer);
      CHECK(b1.peer == b2.peer);
    }
  }
  SUBCASE("peer not pointing back") {
    auto [a, b] = pair_in(DockPhase::Docked);
    b.peer = PortRef{7, Face::East};
    CHECK_THROWS_AS(undock(a, b), ProtocolError);
  }
}

TEST_CASE("sustainment is free") {
  auto [a, b] = pair_in(DockPhase::Docked);
  CHECK(sustain_cost(a, 3600.0) == 0.0);
  CHECK(sustain_cost(a, 0.0) == 0.0);
  auto [u, v] = pair_in(DockPhase::Unlocking);
  CHECK_THROWS_AS(sustain_cost(u, 1.0), ProtocolError);
}

TEST_CASE("property: random operation sequences keep peers symmetric") {
  Rng rng(2024);
  for (int run = 0; run < 200; ++run) {
    auto [a, b] = pair_in(DockPhase::Free);
    for (int i = 0; i < 200; ++i) {
      try {
        if (rng.bernoulli(0.1)) {
          if (rng.bernoulli(0.5)) undock(a, b);
          else undock(b, a);
        } else {
          const auto s = kAllSignals[rng.uniform_int(0, 3)];
          advance_dock(a, b, {s, rng.bernoulli(0.5), rng.bernoulli(0.3)});
        }
      } catch (const ProtocolError&) {
      }
      REQUIRE(legal_pairing(a, b));
      if (a.peer) REQUIRE(*b.peer == a.ref());
      if (b.peer) REQUIRE(*a.peer == b.ref());
      REQUIRE(a.peer.has_value() == phase_has_peer(a.phase));
    }
  }
}
