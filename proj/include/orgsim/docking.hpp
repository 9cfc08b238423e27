#pragma once

#include <utility>

#include "orgsim/robot_model.hpp"

namespace orgsim {

/// Self-alignment acceptance box for two docking faces.
struct AlignmentTolerance {
  double max_offset = 0.01;        // m between face centres
  double max_heading_error = 5.0;  // deg from exact opposition

  static AlignmentTolerance accurate() { return {0.01, 5.0}; }
  static AlignmentTolerance rough() { return {0.02, 10.0}; }
};

/// Validated constructor; both bounds must be strictly positive.
AlignmentTolerance make_tolerance(double max_offset, double max_heading_error);

/// Rough if either side drives on tracks, accurate otherwise.
AlignmentTolerance tolerance_for(ModuleClass a, ModuleClass b);

Vec2 face_center(const Pose& pose, Face face, double edge_length);
double face_normal_heading(const Pose& pose, Face face);

bool attempt_align(const Pose& pose_a, Face face_a, const Pose& pose_b, Face face_b, const AlignmentTolerance& tol,
                   double edge_length = 0.10);

/// Per-tick stimulus for a port pair.
enum class DockSignal : std::uint8_t { Approach, Aligned, Proceed, Abort };
inline constexpr std::array<DockSignal, 4> kAllSignals{DockSignal::Approach, DockSignal::Aligned, DockSignal::Proceed,
                                                       DockSignal::Abort};
std::string_view to_string(DockSignal s);

struct DockInput {
  DockSignal signal = DockSignal::Proceed;
  bool separation_clear = false;  // face centres at least one edge apart
  bool tow = false;               // docking onto a dead module for disposal
  Health health_a = Health::Ok;
  Health health_b = Health::Ok;
};

struct DockStep {
  DockPhase a = DockPhase::Free;
  DockPhase b = DockPhase::Free;
  bool locked = false;       // entered Locking: lock energy is due
  bool docked = false;       // entered Docked: register the edge
  bool separated = false;    // Separating completed
  bool death_abort = false;  // aborted because a participant died
};

/// True iff (a, b) is a legal pair configuration: equal phases, and peers set
/// and mutually pointing exactly in the peer-holding phases.
bool legal_pairing(const DockPort& a, const DockPort& b);

/// Advance both ports one legal step. Throws ProtocolError on an illegal
/// pairing or transition.
DockStep advance_dock(DockPort& a, DockPort& b, const DockInput& input);

/// One-sided undock: `activated` must be Docked and peered with `peer`.
/// Both ports enter Unlocking whatever the peer's health.
std::pair<DockPhase, DockPhase> undock(DockPort& activated, DockPort& peer);

/// Energy to hold a Docked port for `dt`. Zero: the latch holds unpowered.
double sustain_cost(const DockPort& port, double dt);

}  // namespace orgsim
