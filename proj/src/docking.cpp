#include "orgsim/docking.hpp"

#include <cmath>

#include "orgsim/error.hpp"

namespace orgsim {

namespace {

std::string pair_name(DockPhase a, DockPhase b) {
  return "(" + std::string(to_string(a)) + ", " + std::string(to_string(b)) + ")";
}

[[noreturn]] void illegal(DockPhase a, DockPhase b, DockSignal s) {
  throw ProtocolError("illegal transition from " + pair_name(a, b) + " on " + std::string(to_string(s)));
}

void set_phase(DockPort& a, DockPort& b, DockPhase p) {
  a.phase = b.phase = p;
  if (!phase_has_peer(p)) {
    a.peer.reset();
    b.peer.reset();
    a.tow = b.tow = false;
  }
}

}  // namespace

std::string_view to_string(DockSignal s) {
  switch (s) {
    case DockSignal::Approach: return "approach";
    case DockSignal::Aligned: return "aligned";
    case DockSignal::Proceed: return "proceed";
    case DockSignal::Abort: return "abort";
  }
  return "?";
}

AlignmentTolerance make_tolerance(double max_offset, double max_heading_error) {
  if (!(max_offset > 0.0) || !(max_heading_error > 0.0))
    throw ArgumentError("alignment tolerance bounds must be strictly positive");
  return {max_offset, max_heading_error};
}

AlignmentTolerance tolerance_for(ModuleClass a, ModuleClass b) {
  if (a == ModuleClass::Scout || b == ModuleClass::Scout) return AlignmentTolerance::rough();
  return AlignmentTolerance::accurate();
}

double face_normal_heading(const Pose& pose, Face face) { return normalize_heading(pose.heading + face_offset_deg(face)); }

Vec2 face_center(const Pose& pose, Face face, double edge_length) {
  return pose.position() + 0.5 * edge_length * unit_from_heading(face_normal_heading(pose, face));
}

bool attempt_align(const Pose& pose_a, Face face_a, const Pose& pose_b, Face face_b, const AlignmentTolerance& tol,
                   double edge_length) {
  const double opposed = face_normal_heading(pose_a, face_a) + 180.0;
  const double err = std::abs(heading_delta(opposed, face_normal_heading(pose_b, face_b)));
  if (err > tol.max_heading_error) return false;
  const double offset = (face_center(pose_a, face_a, edge_length) - face_center(pose_b, face_b, edge_length)).norm();
  return offset <= tol.max_offset;
}

bool legal_pairing(const DockPort& a, const DockPort& b) {
  if (a.owner == b.owner) return false;
  if (a.phase != b.phase) return false;
  if (phase_has_peer(a.phase)) return a.peer == b.ref() && b.peer == a.ref() && a.tow == b.tow;
  return !a.peer && !b.peer;
}

DockStep advance_dock(DockPort& a, DockPort& b, const DockInput& input) {
  if (!legal_pairing(a, b)) throw ProtocolError("illegal port pairing " + pair_name(a.phase, b.phase));

  const DockPhase p = a.phase;
  const DockSignal s = input.signal;
  const int alive = (input.health_a == Health::Ok) + (input.health_b == Health::Ok);
  DockStep step;

  const bool mid_dock = p == DockPhase::Approaching || p == DockPhase::Aligning || p == DockPhase::Locking;
  if (mid_dock && (alive == 0 || (alive == 1 && !input.tow))) {
    set_phase(a, b, DockPhase::Free);
    step.death_abort = true;
    step.a = step.b = DockPhase::Free;
    return step;
  }

  switch (p) {
    case DockPhase::Free:
      if (s == DockSignal::Approach) {
        if (alive == 0) throw ProtocolError("cannot dock two non-operational modules");
        if (alive == 1 && !input.tow) throw ProtocolError("docking to a dead module requires the tow flag");
        set_phase(a, b, DockPhase::Approaching);
      } else if (s == DockSignal::Aligned) {
        illegal(p, p, s);
      }
      break;
    case DockPhase::Approaching:
      if (s == DockSignal::Aligned) set_phase(a, b, DockPhase::Aligning);
      else if (s == DockSignal::Abort) set_phase(a, b, DockPhase::Free);
      break;
    case DockPhase::Aligning:
      if (s == DockSignal::Aligned) {
        set_phase(a, b, DockPhase::Locking);
        a.peer = b.ref();
        b.peer = a.ref();
        a.tow = b.tow = input.tow;
        step.locked = true;
      } else if (s == DockSignal::Abort) {
        set_phase(a, b, DockPhase::Free);
      } else if (s == DockSignal::Approach) {
        illegal(p, p, s);
      }
      break;
    case DockPhase::Locking:
      if (s != DockSignal::Proceed) illegal(p, p, s);
      set_phase(a, b, DockPhase::Docked);
      step.docked = true;
      break;
    case DockPhase::Docked:
      if (s != DockSignal::Proceed) illegal(p, p, s);
      break;
    case DockPhase::Unlocking:
      if (s != DockSignal::Proceed) illegal(p, p, s);
      set_phase(a, b, DockPhase::Separating);
      break;
    case DockPhase::Separating:
      if (s != DockSignal::Proceed) illegal(p, p, s);
      if (input.separation_clear) {
        set_phase(a, b, DockPhase::Free);
        step.separated = true;
      }
      break;
  }
  step.a = a.phase;
  step.b = b.phase;
  return step;
}

std::pair<DockPhase, DockPhase> undock(DockPort& activated, DockPort& peer) {
  if (activated.phase != DockPhase::Docked)
    throw ProtocolError("undock requires a docked port, found " + std::string(to_string(activated.phase)));
  if (!legal_pairing(activated, peer)) throw ProtocolError("undock: port is not peered with the given port");
  activated.phase = peer.phase = DockPhase::Unlocking;
  return {activated.phase, peer.phase};
}

double sustain_cost(const DockPort& port, double dt) {
  if (port.phase != DockPhase::Docked)
    throw ProtocolError("sustain_cost requires a docked port, found " + std::string(to_string(port.phase)));
  if (dt < 0.0) throw ArgumentError("dt must be non-negative");
  return 0.0;
}

}  // namespace orgsim
