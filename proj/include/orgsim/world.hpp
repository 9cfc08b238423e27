#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "orgsim/rng.hpp"
#include "orgsim/robot_model.hpp"

namespace orgsim {

struct CellIndex {
  int x = 0;
  int y = 0;
  auto operator<=>(const CellIndex&) const = default;
};

/// Inclusive rectangle of cells.
struct GridRect {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;
  bool contains(CellIndex c) const { return c.x >= x0 && c.x <= x1 && c.y >= y0 && c.y <= y1; }
  bool empty() const { return x1 < x0 || y1 < y0; }
};

using SocketId = std::uint32_t;

/// A wall-mounted power socket.
struct Socket {
  SocketId id = 0;
  CellIndex anchor;           // floor cell in front of the wall
  double height = 0.35;       // m above ground
  double power_rating = 20;   // W; NaN until resolved when the map says `auto`
  bool active = false;
  Vec2 wall_normal = Vec2::Zero();  // unit, pointing from the wall into the room
};

class Arena {
 public:
  Arena() = default;
  Arena(int width, int height, double cell_size, std::vector<TerrainClass> cells, GridRect graveyard,
        std::vector<Socket> sockets);

  int width() const { return width_; }
  int height() const { return height_; }
  double cell_size() const { return cell_size_; }
  bool in_bounds(CellIndex c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  std::optional<CellIndex> cell_of(const Vec2& p) const;
  Vec2 cell_center(CellIndex c) const;
  TerrainClass terrain(CellIndex c) const { return cells_[index(c)]; }
  std::optional<TerrainClass> terrain_at(const Vec2& p) const;
  std::size_t index(CellIndex c) const { return static_cast<std::size_t>(c.y) * width_ + c.x; }
  std::size_t cell_count() const { return cells_.size(); }
  std::size_t open_cell_count() const;

  const GridRect& graveyard() const { return graveyard_; }
  const std::vector<Socket>& sockets() const { return sockets_; }
  std::vector<Socket>& sockets() { return sockets_; }

  TerrainLookup lookup() const;

  /// Static checks. Socket heights outside [0.30, 0.40] m are findings unless
  /// `allow_any_socket_height`.
  std::vector<std::string> findings(bool allow_any_socket_height = false) const;

  /// Replace `auto` ratings with seeded draws from {10, 20, 40} W.
  void resolve_socket_ratings(std::uint64_t seed);

 private:
  int width_ = 0;
  int height_ = 0;
  double cell_size_ = 0.1;
  std::vector<TerrainClass> cells_;
  GridRect graveyard_;
  std::vector<Socket> sockets_;
};

/// Parse the plain-text map format (see docs/config_reference.md).
Arena parse_map(const std::string& text);
Arena load_map(const std::string& path);

/// True iff the segment crosses no obstacle or off-arena cell (grid ray cast).
bool line_of_sight(const Arena& arena, const Vec2& from, const Vec2& to);

struct SensedSocket {
  SocketId id = 0;
  Vec2 position = Vec2::Zero();  // anchor cell centre
  bool active = false;
  double power_rating = 0;
  double height = 0;
  Vec2 wall_normal = Vec2::Zero();
  bool operator==(const SensedSocket&) const = default;
};

std::vector<SensedSocket> sense_sockets(const Arena& arena, const Pose& pose, double range);

bool in_graveyard(const Arena& arena, const Pose& pose);

struct ScheduleParams {
  std::uint64_t seed = 0;
  std::uint32_t dwell_min = 600;  // ticks
  std::uint32_t dwell_max = 3600;
  std::uint32_t active_count = 1;
};

/// Seeded dwell-time replacement: an active socket whose dwell expires is
/// switched off and a randomly drawn inactive socket takes its place.
class SocketSchedule {
 public:
  SocketSchedule(const ScheduleParams& params, std::size_t socket_count);

  /// Advance to `tick` (strictly increasing; the first call initialises).
  /// Returns ids whose state changed, in the order they changed.
  std::vector<SocketId> step(std::uint64_t tick, std::span<Socket> sockets);

 private:
  ScheduleParams params_;
  Rng rng_;
  std::vector<std::uint32_t> remaining_;
  std::optional<std::uint64_t> last_tick_;
};

}  // namespace orgsim
