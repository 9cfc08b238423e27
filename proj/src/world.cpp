#include "orgsim/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "orgsim/error.hpp"

namespace orgsim {

Arena::Arena(int width, int height, double cell_size, std::vector<TerrainClass> cells, GridRect graveyard,
             std::vector<Socket> sockets)
    : width_(width),
      height_(height),
      cell_size_(cell_size),
      cells_(std::move(cells)),
      graveyard_(graveyard),
      sockets_(std::move(sockets)) {
  if (width_ <= 0 || height_ <= 0) throw ArgumentError("arena grid must be non-empty");
  if (!(cell_size_ > 0.0)) throw ArgumentError("cell size must be positive");
  if (cells_.size() != static_cast<std::size_t>(width_) * height_) throw ArgumentError("arena cell count mismatch");
  static constexpr std::array<CellIndex, 4> kDirs{{{0, 1}, {1, 0}, {0, -1}, {-1, 0}}};
  for (auto& s : sockets_) {
    s.wall_normal = Vec2::Zero();
    for (auto d : kDirs) {
      const CellIndex n{s.anchor.x + d.x, s.anchor.y + d.y};
      if (in_bounds(n) && terrain(n) == TerrainClass::Obstacle) {
        s.wall_normal = Vec2(-d.x, -d.y);
        break;
      }
    }
  }
}

std::optional<CellIndex> Arena::cell_of(const Vec2& p) const {
  if (!std::isfinite(p.x()) || !std::isfinite(p.y())) return std::nullopt;
  const double fx = std::floor(p.x() / cell_size_);
  const double fy = std::floor(p.y() / cell_size_);
  if (fx < 0 || fy < 0 || fx >= width_ || fy >= height_) return std::nullopt;
  return CellIndex{static_cast<int>(fx), static_cast<int>(fy)};
}

Vec2 Arena::cell_center(CellIndex c) const { return {(c.x + 0.5) * cell_size_, (c.y + 0.5) * cell_size_}; }

std::optional<TerrainClass> Arena::terrain_at(const Vec2& p) const {
  const auto c = cell_of(p);
  if (!c) return std::nullopt;
  return terrain(*c);
}

std::size_t Arena::open_cell_count() const {
  return static_cast<std::size_t>(
      std::count_if(cells_.begin(), cells_.end(), [](TerrainClass t) { return t != TerrainClass::Obstacle; }));
}

TerrainLookup Arena::lookup() const {
  return {[this](const Vec2& p) { return terrain_at(p); }, cell_size_};
}

std::vector<std::string> Arena::findings(bool allow_any_socket_height) const {
  std::vector<std::string> out;
  if (!graveyard_.empty() && (graveyard_.x0 < 0 || graveyard_.y0 < 0 || graveyard_.x1 >= width_ ||
                              graveyard_.y1 >= height_))
    out.push_back("map.graveyard: region outside the grid");
  std::vector<SocketId> seen;
  for (const auto& s : sockets_) {
    const std::string tag = "map.socket[" + std::to_string(s.id) + "]";
    if (std::find(seen.begin(), seen.end(), s.id) != seen.end()) out.push_back(tag + ": duplicate socket id");
    seen.push_back(s.id);
    if (!in_bounds(s.anchor)) {
      out.push_back(tag + ": anchor cell outside the grid");
      continue;
    }
    if (terrain(s.anchor) == TerrainClass::Obstacle) out.push_back(tag + ": anchor cell is an obstacle");
    if (s.wall_normal.isZero()) out.push_back(tag + ": anchor cell is not adjacent to a wall");
    if (!allow_any_socket_height && (s.height < 0.30 || s.height > 0.40))
      out.push_back(tag + ": height " + std::to_string(s.height) + " m outside [0.30, 0.40]");
    if (!std::isnan(s.power_rating) && !(s.power_rating > 0.0)) out.push_back(tag + ": power rating must be positive");
  }
  return out;
}

void Arena::resolve_socket_ratings(std::uint64_t seed) {
  static constexpr std::array<double, 3> kRatings{10.0, 20.0, 40.0};
  Rng rng(stream_seed(seed, "socket_ratings"));
  for (auto& s : sockets_) {
    const auto pick = rng.uniform_int(0, kRatings.size() - 1);
    if (std::isnan(s.power_rating)) s.power_rating = kRatings[pick];
  }
}

namespace {

std::optional<TerrainClass> terrain_from_char(char c) {
  switch (c) {
    case '.': case 'G': return TerrainClass::Plain;
    case 'r': return TerrainClass::Rough;
    case 's': return TerrainClass::Slope;
    case 'h': return TerrainClass::SmallHole;
    case '#': return TerrainClass::Obstacle;
    default: return std::nullopt;
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Arena parse_map(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  double cell_size = 0.1;
  std::vector<std::string> rows;
  std::vector<Socket> sockets;
  bool in_grid = false;
  bool grid_done = false;

  while (std::getline(in, raw)) {
    ++lineno;
    if (in_grid) {
      std::string row = raw;
      if (!row.empty() && row.back() == '\r') row.pop_back();
      if (trim(row) == "end") {
        in_grid = false;
        grid_done = true;
        continue;
      }
      if (!rows.empty() && row.size() != rows.front().size())
        throw ParseError(lineno, "grid row width " + std::to_string(row.size()) + " differs from " +
                                     std::to_string(rows.front().size()));
      for (char c : row)
        if (!terrain_from_char(c)) throw ParseError(lineno, std::string("unknown cell character '") + c + "'");
      rows.push_back(row);
      continue;
    }
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "cell_size") {
      if (!(ls >> cell_size) || !(cell_size > 0.0)) throw ParseError(lineno, "cell_size needs a positive number");
    } else if (key == "grid") {
      if (grid_done) throw ParseError(lineno, "second grid block");
      in_grid = true;
    } else if (key == "socket") {
      Socket s;
      std::string rating;
      if (!(ls >> s.id >> s.anchor.x >> s.anchor.y >> s.height >> rating))
        throw ParseError(lineno, "socket needs: id x y height rating|auto");
      if (rating == "auto") {
        s.power_rating = std::numeric_limits<double>::quiet_NaN();
      } else {
        try {
          std::size_t used = 0;
          s.power_rating = std::stod(rating, &used);
          if (used != rating.size()) throw std::invalid_argument(rating);
        } catch (const std::exception&) {
          throw ParseError(lineno, "bad socket rating '" + rating + "'");
        }
      }
      sockets.push_back(s);
    } else {
      throw ParseError(lineno, "unknown directive '" + key + "'");
    }
  }
  if (in_grid) throw ParseError(lineno, "grid block not terminated by 'end'");
  if (rows.empty() || rows.front().empty()) throw ParseError(lineno, "map has no grid");

  const int width = static_cast<int>(rows.front().size());
  const int height = static_cast<int>(rows.size());
  std::vector<TerrainClass> cells(static_cast<std::size_t>(width) * height);
  GridRect grave{width, height, -1, -1};
  for (int r = 0; r < height; ++r) {
    const int y = height - 1 - r;  // first row is the top (north) edge
    for (int x = 0; x < width; ++x) {
      const char c = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(x)];
      cells[static_cast<std::size_t>(y) * width + x] = *terrain_from_char(c);
      if (c == 'G') {
        grave.x0 = std::min(grave.x0, x);
        grave.y0 = std::min(grave.y0, y);
        grave.x1 = std::max(grave.x1, x);
        grave.y1 = std::max(grave.y1, y);
      }
    }
  }
  if (grave.x1 < 0) grave = GridRect{};
  for (int y = grave.y0; y <= grave.y1; ++y)
    for (int x = grave.x0; x <= grave.x1; ++x)
      if (rows[static_cast<std::size_t>(height - 1 - y)][static_cast<std::size_t>(x)] != 'G')
        throw ParseError(lineno, "graveyard cells must form a filled rectangle");
  return Arena(width, height, cell_size, std::move(cells), grave, std::move(sockets));
}

Arena load_map(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot read map file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_map(ss.str());
}

bool line_of_sight(const Arena& arena, const Vec2& from, const Vec2& to) {
  auto start = arena.cell_of(from);
  const auto goal = arena.cell_of(to);
  if (!start || !goal) return false;
  const double cs = arena.cell_size();
  CellIndex c = *start;
  const Vec2 d = to - from;
  const int step_x = d.x() > 0 ? 1 : (d.x() < 0 ? -1 : 0);
  const int step_y = d.y() > 0 ? 1 : (d.y() < 0 ? -1 : 0);
  const double inf = std::numeric_limits<double>::infinity();
  auto boundary = [&](double p, int cell, int step) { return (step > 0 ? (cell + 1) * cs : cell * cs) - p; };
  double t_max_x = step_x ? boundary(from.x(), c.x, step_x) / d.x() : inf;
  double t_max_y = step_y ? boundary(from.y(), c.y, step_y) / d.y() : inf;
  const double t_dx = step_x ? cs / std::abs(d.x()) : inf;
  const double t_dy = step_y ? cs / std::abs(d.y()) : inf;

  while (true) {
    if (!arena.in_bounds(c) || arena.terrain(c) == TerrainClass::Obstacle) return false;
    if (c == *goal) return true;
    if (t_max_x > 1.0 && t_max_y > 1.0) return true;  // numerical end of segment
    if (t_max_x < t_max_y) {
      c.x += step_x;
      t_max_x += t_dx;
    } else {
      c.y += step_y;
      t_max_y += t_dy;
    }
  }
}

std::vector<SensedSocket> sense_sockets(const Arena& arena, const Pose& pose, double range) {
  if (!(range > 0.0)) throw ArgumentError("sensing range must be positive");
  std::vector<SensedSocket> out;
  const Vec2 p = pose.position();
  for (const auto& s : arena.sockets()) {
    const Vec2 at = arena.cell_center(s.anchor);
    if ((at - p).norm() > range) continue;
    if (!line_of_sight(arena, p, at)) continue;
    out.push_back({s.id, at, s.active, s.power_rating, s.height, s.wall_normal});
  }
  return out;
}

bool in_graveyard(const Arena& arena, const Pose& pose) {
  const auto c = arena.cell_of(pose.position());
  if (!c) throw ArgumentError("pose outside the arena");
  return arena.graveyard().contains(*c);
}

SocketSchedule::SocketSchedule(const ScheduleParams& params, std::size_t socket_count)
    : params_(params), rng_(stream_seed(params.seed, "schedule")), remaining_(socket_count, 0) {
  if (params.active_count > socket_count)
    throw ConfigError("schedule.active_count", std::to_string(params.active_count) + " exceeds socket count " +
                                                   std::to_string(socket_count));
  if (params.dwell_min == 0) throw ConfigError("schedule.dwell_min", "must be at least 1 tick");
  if (params.dwell_min > params.dwell_max) throw ConfigError("schedule.dwell_max", "must be >= dwell_min");
}

std::vector<SocketId> SocketSchedule::step(std::uint64_t tick, std::span<Socket> sockets) {
  if (sockets.size() != remaining_.size()) throw ArgumentError("socket set changed under the schedule");
  std::vector<SocketId> changed;
  auto draw_dwell = [&] {
    return static_cast<std::uint32_t>(rng_.uniform_int(params_.dwell_min, params_.dwell_max));
  };

  if (!last_tick_) {
    std::vector<std::size_t> order(sockets.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    // Partial Fisher-Yates: the first active_count entries are the initial set.
    for (std::size_t i = 0; i < params_.active_count; ++i) {
      const auto j = static_cast<std::size_t>(rng_.uniform_int(i, order.size() - 1));
      std::swap(order[i], order[j]);
    }
    std::vector<bool> on(sockets.size(), false);
    for (std::size_t i = 0; i < params_.active_count; ++i) on[order[i]] = true;
    for (std::size_t i = 0; i < sockets.size(); ++i) {
      if (sockets[i].active != on[i]) changed.push_back(sockets[i].id);
      sockets[i].active = on[i];
      remaining_[i] = on[i] ? draw_dwell() : 0;
    }
    last_tick_ = tick;
    return changed;
  }
  if (tick <= *last_tick_) throw ArgumentError("schedule ticks must increase");

  for (std::uint64_t t = *last_tick_ + 1; t <= tick; ++t) {
    std::vector<std::size_t> expired;
    for (std::size_t i = 0; i < sockets.size(); ++i)
      if (sockets[i].active && --remaining_[i] == 0) expired.push_back(i);
    for (std::size_t i : expired) {
      std::vector<std::size_t> inactive;
      for (std::size_t k = 0; k < sockets.size(); ++k)
        if (!sockets[k].active) inactive.push_back(k);
      if (inactive.empty()) {
        remaining_[i] = draw_dwell();
        continue;
      }
      const auto pick = inactive[static_cast<std::size_t>(rng_.uniform_int(0, inactive.size() - 1))];
      sockets[i].active = false;
      remaining_[i] = 0;
      sockets[pick].active = true;
      remaining_[pick] = draw_dwell();
      changed.push_back(sockets[i].id);
      changed.push_back(sockets[pick].id);
    }
  }
  last_tick_ = tick;
  return changed;
}

}  // namespace orgsim
