#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "orgsim/error.hpp"
#include "orgsim/rng.hpp"
#include "orgsim/world.hpp"

using namespace orgsim;

namespace {

const char* kRoom =
    "# test room\n"
    "cell_size 0.1\n"
    "grid\n"
    "##########\n"
    "#........#\n"
    "#...#....#\n"
    "#...#..GG#\n"
    "#...#..GG#\n"
    "#........#\n"
    "##########\n"
    "end\n"
    "socket 0 1 1 0.35 20\n"
    "socket 1 8 5 0.30 auto\n"
    "socket 2 5 1 0.40 10\n";

Arena room() { return parse_map(kRoom); }

std::vector<Socket> sockets(std::size_t n) {
  std::vector<Socket> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i].id = static_cast<SocketId>(i);
  return s;
}

/// Oracle: dense sampling of the segment against the cell grid.
bool sampled_los(const Arena& a, const Vec2& from, const Vec2& to) {
  const double len = (to - from).norm();
  const int n = std::max(1, static_cast<int>(len / (a.cell_size() * 1e-3)));
  for (int i = 0; i <= n; ++i) {
    const auto t = a.terrain_at(from + (to - from) * (static_cast<double>(i) / n));
    if (!t || *t == TerrainClass::Obstacle) return false;
  }
  return true;
}

/// Whether the segment passes within `eps` of a grid vertex (ambiguous for a ray cast).
bool grazes_vertex(const Arena& a, const Vec2& from, const Vec2& to, double eps) {
  const Vec2 d = to - from;
  for (int x = 0; x <= a.width(); ++x)
    for (int y = 0; y <= a.height(); ++y) {
      const Vec2 v(x * a.cell_size(), y * a.cell_size());
      const double t = std::clamp((v - from).dot(d) / d.squaredNorm(), 0.0, 1.0);
      if ((from + t * d - v).norm() < eps) return true;
    }
  return false;
}

}  // namespace

TEST_CASE("map parsing") {
  const auto a = room();
  CHECK(a.width() == 10);
  CHECK(a.height() == 7);
  CHECK(a.terrain({4, 3}) == TerrainClass::Obstacle);  // the first grid row is the north edge
  CHECK(a.terrain({0, 0}) == TerrainClass::Obstacle);
  CHECK(a.graveyard().x0 == 7);
  CHECK(a.graveyard().y0 == 2);
  CHECK(a.graveyard().x1 == 8);
  CHECK(a.graveyard().y1 == 3);
  CHECK(a.sockets().size() == 3);
  CHECK(std::isnan(a.sockets()[1].power_rating));
  CHECK(a.findings().empty());

  CHECK_THROWS_AS(parse_map("grid\n##\n#\nend\n"), ParseError);
  CHECK_THROWS_AS(parse_map("grid\n#x#\nend\n"), ParseError);
  CHECK_THROWS_AS(parse_map("grid\n###\n"), ParseError);
  CHECK_THROWS_AS(parse_map("bogus 1\n"), ParseError);
  CHECK_THROWS_AS(parse_map("grid\nG.G\nend\n"), ParseError);
}

TEST_CASE("map findings") {
  auto bad = parse_map(
      "grid\n#######\n#.....#\n#.....#\n#.....#\n#######\nend\n"
      "socket 0 3 2 0.35 20\n"   // not against a wall
      "socket 1 1 1 0.10 20\n"   // too low
      "socket 1 3 1 0.35 -5\n"); // duplicate id, bad rating
  const auto f = bad.findings();
  CHECK(f.size() >= 4);
  CHECK(bad.findings(true).size() == f.size() - 1);
}

TEST_CASE("auto ratings are seeded draws from the rating set") {
  auto a = room();
  auto b = room();
  a.resolve_socket_ratings(9);
  b.resolve_socket_ratings(9);
  for (std::size_t i = 0; i < a.sockets().size(); ++i) {
    CHECK(a.sockets()[i].power_rating == b.sockets()[i].power_rating);
    const double r = a.sockets()[i].power_rating;
    CHECK((r == 10 || r == 20 || r == 40));
  }
  CHECK(a.sockets()[0].power_rating == 20);  // explicit ratings are kept
}

TEST_CASE("schedule") {
  SUBCASE("same seed, same trace") {
    auto s1 = sockets(10), s2 = sockets(10);
    SocketSchedule a({42, 5, 40, 3}, 10), b({42, 5, 40, 3}, 10);
    for (std::uint64_t t = 0; t < 1000; ++t) {
      CHECK(a.step(t, s1) == b.step(t, s2));
      for (std::size_t i = 0; i < 10; ++i) REQUIRE(s1[i].active == s2[i].active);
    }
  }
  SUBCASE("cardinality holds on every tick") {
    auto s = sockets(10);
    SocketSchedule sch({42, 5, 40, 3}, 10);
    std::set<std::vector<bool>> distinct;
    for (std::uint64_t t = 0; t < 1000; ++t) {
      sch.step(t, s);
      int active = 0;
      std::vector<bool> state;
      for (const auto& x : s) {
        active += x.active;
        state.push_back(x.active);
      }
      REQUIRE(active == 3);
      distinct.insert(state);
    }
    CHECK(distinct.size() > 5);
  }
  SUBCASE("dwell bounds") {
    auto s = sockets(4);
    SocketSchedule sch({7, 20, 30, 1}, 4);
    std::uint64_t since = 0;
    int on = -1;
    for (std::uint64_t t = 0; t < 3000; ++t) {
      sch.step(t, s);
      int now = -1;
      for (const auto& x : s)
        if (x.active) now = static_cast<int>(x.id);
      if (now != on) {
        if (on >= 0) {
          CHECK(t - since >= 20);
          CHECK(t - since <= 30);
        }
        on = now;
        since = t;
      }
    }
  }
  SUBCASE("all active never changes") {
    auto s = sockets(3);
    SocketSchedule sch({1, 2, 3, 3}, 3);
    sch.step(0, s);
    for (std::uint64_t t = 1; t < 200; ++t) CHECK(sch.step(t, s).empty());
  }
  CHECK_THROWS_AS(SocketSchedule({1, 2, 3, 4}, 3), ConfigError);
}

TEST_CASE("socket sensing") {
  auto a = room();
  for (auto& s : a.sockets()) s.active = true;
  const Pose p{0.15, 0.55, 0};  // cell (1,5), 0.4 m north of socket 0's anchor (1,1)
  auto seen = sense_sockets(a, p, 2.0);
  std::set<SocketId> ids;
  for (const auto& s : seen) ids.insert(s.id);
  CHECK(ids.count(0));
  // Socket 2 at (5,1): the line from (1,5) crosses the pillar at x=4.
  CHECK_FALSE(ids.count(2));
  CHECK(sense_sockets(a, p, 1e-4).empty());

  SUBCASE("property: monotone in range") {
    Rng rng(8);
    for (int i = 0; i < 300; ++i) {
      const Pose q{rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.6), 0};
      if (a.terrain_at(q.position()) == TerrainClass::Obstacle) continue;
      const double r1 = rng.uniform(0, 1), r2 = r1 + rng.uniform(0, 1);
      std::set<SocketId> s1, s2;
      for (const auto& s : sense_sockets(a, q, r1)) s1.insert(s.id);
      for (const auto& s : sense_sockets(a, q, r2)) s2.insert(s.id);
      CHECK(std::includes(s2.begin(), s2.end(), s1.begin(), s1.end()));
    }
  }
}

TEST_CASE("line of sight agrees with a sampled ray-cast oracle") {
  const auto a = room();
  Rng rng(77);
  int compared = 0;
  for (int i = 0; i < 2000; ++i) {
    const Vec2 from(rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.6));
    const Vec2 to(rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.6));
    if ((to - from).norm() < 1e-6 || grazes_vertex(a, from, to, 1e-3)) continue;
    ++compared;
    CHECK(line_of_sight(a, from, to) == sampled_los(a, from, to));
  }
  CHECK(compared > 1500);
}

TEST_CASE("graveyard") {
  const auto a = room();
  CHECK(in_graveyard(a, {0.8, 0.3, 0}));    // centre of the 2x2 region
  CHECK_FALSE(in_graveyard(a, {0.15, 0.15, 0}));
  CHECK(in_graveyard(a, {0.75, 0.25, 0}));  // boundary cell (7,2)
  CHECK(in_graveyard(a, {0.85, 0.35, 0}));  // boundary cell (8,3)
  CHECK_THROWS_AS(in_graveyard(a, {-1, 0, 0}), ArgumentError);
}
