#pragma once

#include <span>
#include <string>

#include "orgsim/organism.hpp"
#include "orgsim/robot_model.hpp"
#include "orgsim/tariff.hpp"
#include "orgsim/world.hpp"

namespace orgsim {

/// Battery contents live on a 2^-24 J grid. Sums and differences of grid
/// values below 2^29 J are exact in double precision, so pure transfers
/// conserve energy bit-for-bit.
inline constexpr double kEnergyQuantum = 0x1p-24;
double quantize_energy(double joules);
double quantize_energy_down(double joules);

/// What a module did during one tick, in tariff units.
struct ActivityBreakdown {
  double mass_distance = 0;  // kg*m moved
  double torque_angle = 0;   // N*m*rad actuated
  int locks = 0;             // dock locks engaged
};

/// Run-wide conservation ledger:
/// initial_stored + efficiency * drawn == consumed + stored.
struct EnergyLedger {
  double efficiency = 0.9;
  double initial_stored = 0;
  double drawn = 0;     // J taken from sockets
  double consumed = 0;  // J spent by modules
  double stored = 0;    // J in batteries at the last snapshot

  double residual() const { return initial_stored + efficiency * drawn - consumed - stored; }
  void snapshot(const Fleet& fleet);
};

struct ConsumeResult {
  double demand = 0;
  double consumed = 0;
  bool died = false;
};

ConsumeResult consume(ModuleState& state, const ActivityBreakdown& activity, double dt, const Tariff& tariff,
                      EnergyLedger& ledger);

/// Whether an organism (or singleton) of stack height `reach` touching the
/// socket's anchor cell may draw from it.
bool recharge_access(double reach, const Socket& socket, bool touches_anchor);

struct RechargeOutcome {
  enum class Status { Charged, Inactive, Unreachable, Full };
  Status status = Status::Charged;
  double drawn = 0;
  double stored = 0;
  bool refused() const { return status == Status::Inactive || status == Status::Unreachable; }
};
std::string_view to_string(RechargeOutcome::Status s);

/// Charge one module from `socket`. Refusal is a value, not an error.
RechargeOutcome recharge(ModuleState& state, const ModuleSpec& spec, const Socket& socket, bool access, double dt,
                         const Tariff& tariff, EnergyLedger& ledger);

/// Level battery fractions along docked edges of operational members, at most
/// `rate * dt` joules per edge. Returns total joules moved.
double share_energy(const Organism& org, Fleet& fleet, double dt, double rate);

struct SwHwRatio {
  enum class Kind { Value, Infinite, Undefined };
  Kind kind = Kind::Undefined;
  double value = 0;
  std::string str() const;
  bool operator==(const SwHwRatio&) const = default;
};

struct DeathTally {
  int energy_dead = 0;
  int hardware_dead = 0;
  SwHwRatio ratio;
};

DeathTally classify_deaths(std::span<const ModuleState> states);

/// Per-tick failure probability for a hazard of `rate_per_day` failures per module-day.
double hazard_probability(double rate_per_day, std::uint32_t ticks_per_day);

}  // namespace orgsim
