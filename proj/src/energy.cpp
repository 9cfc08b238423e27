#include "orgsim/energy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "orgsim/error.hpp"

namespace orgsim {

namespace {
constexpr double kScale = 0x1p24;
}

double quantize_energy(double joules) { return std::round(joules * kScale) / kScale; }
double quantize_energy_down(double joules) { return std::floor(joules * kScale) / kScale; }

void EnergyLedger::snapshot(const Fleet& fleet) {
  double sum = 0.0;
  for (const auto& s : fleet.states) sum += s.battery;
  stored = sum;
}

ConsumeResult consume(ModuleState& state, const ActivityBreakdown& activity, double dt, const Tariff& tariff,
                      EnergyLedger& ledger) {
  if (!state.alive()) throw ArgumentError("consume: module " + std::to_string(state.id) + " is not operational");
  if (!(dt > 0.0)) throw ArgumentError("consume: dt must be positive");
  ConsumeResult r;
  r.demand = quantize_energy(tariff.idle * dt + (state.coprocessor_on ? tariff.coprocessor * dt : 0.0) +
                             tariff.locomotion * activity.mass_distance +
                             tariff.actuation * activity.torque_angle + tariff.lock_cost * activity.locks);
  r.consumed = std::min(r.demand, state.battery);
  state.battery -= r.consumed;
  ledger.consumed += r.consumed;
  if (state.battery <= 0.0) {
    state.battery = 0.0;
    state.health = Health::EnergyDead;
    r.died = true;
  }
  return r;
}

bool recharge_access(double reach, const Socket& socket, bool touches_anchor) {
  return touches_anchor && reach + 1e-9 >= socket.height;
}

std::string_view to_string(RechargeOutcome::Status s) {
  using S = RechargeOutcome::Status;
  switch (s) {
    case S::Charged: return "charged";
    case S::Inactive: return "inactive";
    case S::Unreachable: return "unreachable";
    case S::Full: return "full";
  }
  return "?";
}

RechargeOutcome recharge(ModuleState& state, const ModuleSpec& spec, const Socket& socket, bool access, double dt,
                         const Tariff& tariff, EnergyLedger& ledger) {
  if (!(dt > 0.0)) throw ArgumentError("recharge: dt must be positive");
  RechargeOutcome r;
  if (!socket.active) {
    r.status = RechargeOutcome::Status::Inactive;
    return r;
  }
  if (!access || !state.alive()) {
    r.status = RechargeOutcome::Status::Unreachable;
    return r;
  }
  const double room = spec.battery_capacity - state.battery;
  const double offered = socket.power_rating * dt * tariff.recharge_efficiency;
  r.stored = quantize_energy_down(std::min(offered, room));
  if (r.stored <= 0.0) {
    r.stored = 0.0;
    r.status = RechargeOutcome::Status::Full;
    return r;
  }
  // The socket delivers only what the battery absorbs.
  r.drawn = r.stored / tariff.recharge_efficiency;
  state.battery += r.stored;
  ledger.drawn += r.drawn;
  return r;
}

double share_energy(const Organism& org, Fleet& fleet, double dt, double rate) {
  if (rate < 0.0) throw ArgumentError("share_energy: rate must be non-negative");
  const double cap_per_edge = quantize_energy_down(rate * dt);
  if (cap_per_edge <= 0.0) return 0.0;
  double moved = 0.0;
  for (const auto& e : org.edges) {
    auto& u = fleet.state(e.a.module);
    auto& v = fleet.state(e.b.module);
    if (!u.alive() || !v.alive()) continue;
    if (u.port(e.a.face).phase != DockPhase::Docked) continue;
    const double cu = fleet.spec(u.id).battery_capacity;
    const double cv = fleet.spec(v.id).battery_capacity;
    const bool u_gives = u.battery / cu > v.battery / cv;
    auto& donor = u_gives ? u : v;
    auto& taker = u_gives ? v : u;
    const double cd = u_gives ? cu : cv;
    const double ct = u_gives ? cv : cu;
    // Amount that levels the two fractions exactly.
    const double level = (donor.battery * ct - taker.battery * cd) / (cd + ct);
    const double x = quantize_energy_down(std::min({level, cap_per_edge, donor.battery, ct - taker.battery}));
    if (x <= 0.0) continue;
    donor.battery -= x;
    taker.battery += x;
    moved += x;
  }
  return moved;
}

std::string SwHwRatio::str() const {
  switch (kind) {
    case Kind::Infinite: return "inf";
    case Kind::Undefined: return "undefined";
    case Kind::Value: break;
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

DeathTally classify_deaths(std::span<const ModuleState> states) {
  DeathTally t;
  for (const auto& s : states) {
    if (s.health == Health::EnergyDead) ++t.energy_dead;
    else if (s.health == Health::HardwareDead) ++t.hardware_dead;
  }
  if (t.hardware_dead > 0) t.ratio = {SwHwRatio::Kind::Value, static_cast<double>(t.energy_dead) / t.hardware_dead};
  else if (t.energy_dead > 0) t.ratio = {SwHwRatio::Kind::Infinite, 0.0};
  else t.ratio = {SwHwRatio::Kind::Undefined, 0.0};
  return t;
}

double hazard_probability(double rate_per_day, std::uint32_t ticks_per_day) {
  if (rate_per_day <= 0.0 || ticks_per_day == 0) return 0.0;
  return -std::expm1(-rate_per_day / static_cast<double>(ticks_per_day));
}

}  // namespace orgsim
