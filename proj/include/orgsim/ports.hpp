#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string_view>

namespace orgsim {

using ModuleId = std::uint32_t;

/// Docking faces, named by direction relative to the module heading:
/// North = front, West = left, South = rear, East = right.
enum class Face : std::uint8_t { North = 0, East = 1, South = 2, West = 3 };

inline constexpr std::array<Face, 4> kAllFaces{Face::North, Face::East, Face::South, Face::West};

/// Face normal as an angle offset from the module heading (counter-clockwise, degrees).
constexpr double face_offset_deg(Face f) {
  switch (f) {
    case Face::North: return 0.0;
    case Face::East: return -90.0;
    case Face::South: return 180.0;
    case Face::West: return 90.0;
  }
  return 0.0;
}

std::string_view to_string(Face f);
std::optional<Face> face_from_string(std::string_view s);

enum class DockPhase : std::uint8_t { Free, Approaching, Aligning, Locking, Docked, Unlocking, Separating };

inline constexpr std::array<DockPhase, 7> kAllPhases{DockPhase::Free,      DockPhase::Approaching, DockPhase::Aligning,
                                                     DockPhase::Locking,   DockPhase::Docked,      DockPhase::Unlocking,
                                                     DockPhase::Separating};

std::string_view to_string(DockPhase p);

/// Phases in which a port holds a peer reference.
constexpr bool phase_has_peer(DockPhase p) {
  return p == DockPhase::Locking || p == DockPhase::Docked || p == DockPhase::Unlocking;
}

struct PortRef {
  ModuleId module = 0;
  Face face = Face::North;
  auto operator<=>(const PortRef&) const = default;
};

/// One of the four hermaphroditic docking units on a module.
struct DockPort {
  ModuleId owner = 0;
  Face face = Face::North;
  DockPhase phase = DockPhase::Free;
  std::optional<PortRef> peer;
  bool tow = false;

  PortRef ref() const { return {owner, face}; }
};

}  // namespace orgsim
