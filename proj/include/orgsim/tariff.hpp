#pragma once

namespace orgsim {

/// Energy consumption rates. Defaults size a 20 kJ battery to roughly ten
/// simulated hours of idling.
struct Tariff {
  double idle = 0.5;                 // W
  double coprocessor = 2.0;          // W while the high-power unit is on
  double locomotion = 2.0;           // J per metre per kg moved
  double actuation = 1.0;            // J per (N*m * rad)
  double lock_cost = 5.0;            // J per port, once per lock
  double recharge_efficiency = 0.9;  // (0, 1]
};

}  // namespace orgsim
