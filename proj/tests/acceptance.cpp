// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "orgsim/docking.hpp"
#include "orgsim/energy.hpp"
#include "orgsim/error.hpp"
#include "orgsim/harness.hpp"
#include "orgsim/organism.hpp"
#include "orgsim/rng.hpp"
#include "support/random_scenario.hpp"

using namespace orgsim;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string data(const std::string& rel) { return std::string(ORGSIM_DATA_DIR) + "/" + rel; }

// ------------------------------------------------------------ 1 Table I

Verdict table_fidelity() {
  Verdict v;
  const auto t0 = Clock::now();
  struct Row {
    ModuleClass cls;
    double speed, torque, joint_speed, bend;
    std::optional<double> rot;
    int dofs;
  };
  const Row rows[] = {{ModuleClass::Scout, 0.125, 3.0, 37.2, 90.0, 180.0, 2},
                      {ModuleClass::Backbone, 0.06, 7.0, 180.0, 90.0, std::nullopt, 1},
                      {ModuleClass::ActiveWheel, 0.31, 5.0, 50.0, 90.0, 180.0, 2}};
  for (const auto& r : rows) {
    const auto s = make_module_spec(r.cls);
    const std::string n(to_string(r.cls));
    if (s.max_speed != r.speed) v.fail(n + " max_speed");
    if (s.max_torque != r.torque) v.fail(n + " max_torque");
    if (s.max_joint_speed != r.joint_speed) v.fail(n + " max_joint_speed");
    if (s.bend_range != r.bend) v.fail(n + " bend_range");
    if (s.rot_range != r.rot) v.fail(n + " rot_range");
    if (s.dof_count != r.dofs) v.fail(n + " dof_count");
  }
  const double dt = seconds_since(t0);
  if (dt >= 1.0) v.fail("took " + std::to_string(dt) + " s");
  if (v.pass) v.detail = "3 classes exact";
  return v;
}

// ------------------------------------------------------- 2 docking protocol

DockPort port(ModuleId owner, Face face, DockPhase phase) {
  DockPort p;
  p.owner = owner;
  p.face = face;
  p.phase = phase;
  return p;
}

bool same_port_state(const DockPort& a, const DockPort& b) {
  return a.phase == b.phase && a.peer == b.peer && a.tow == b.tow;
}

Verdict docking_soundness() {
  Verdict v;
  const auto t0 = Clock::now();
  const Health healths[] = {Health::Ok, Health::EnergyDead, Health::HardwareDead};
  std::size_t combos = 0;
  for (auto pa : kAllPhases)
    for (auto pb : kAllPhases)
      for (bool peered : {false, true})
        for (bool tow_flag : {false, true})
          for (auto sig : kAllSignals)
            for (bool clear : {false, true})
              for (bool tow_in : {false, true})
                for (auto ha : healths)
                  for (auto hb : healths) {
                    ++combos;
                    auto a = port(0, Face::North, pa);
                    auto b = port(1, Face::South, pb);
                    if (peered) {
                      a.peer = b.ref();
                      b.peer = a.ref();
                      a.tow = b.tow = tow_flag;
                    }
                    const bool legal_before = legal_pairing(a, b);
                    const auto a0 = a, b0 = b;
                    try {
                      const auto step = advance_dock(a, b, {sig, clear, tow_in, ha, hb});
                      if (!legal_before) v.fail("illegal pairing accepted");
                      if (!legal_pairing(a, b))
                        v.fail(std::string("closure broken from ") + std::string(to_string(pa)));
                      if (a.peer.has_value() != b.peer.has_value()) v.fail("peer asymmetry");
                      if (a.peer && (*a.peer != b.ref() || *b.peer != a.ref())) v.fail("peers do not point at each other");
                      if (step.a != a.phase || step.b != b.phase) v.fail("step report disagrees with ports");
                    } catch (const ProtocolError&) {
                      if (!same_port_state(a, a0) || !same_port_state(b, b0)) v.fail("rejected transition mutated ports");
                    }
                  }

  // One-sided undock from either side reaches the same pair state.
  for (bool tow : {false, true}) {
    auto a = port(0, Face::East, DockPhase::Docked);
    auto b = port(1, Face::West, DockPhase::Docked);
    a.peer = b.ref();
    b.peer = a.ref();
    a.tow = b.tow = tow;
    auto a1 = a, b1 = b, a2 = a, b2 = b;
    undock(a1, b1);
    undock(b2, a2);
    if (!same_port_state(a1, a2) || !same_port_state(b1, b2)) v.fail("one-sided undock is side-dependent");
    if (!legal_pairing(a1, b1)) v.fail("undock left an illegal pair");
  }
  for (auto p : kAllPhases) {
    if (p == DockPhase::Docked) continue;
    auto a = port(0, Face::North, p);
    auto b = port(1, Face::South, p);
    try {
      undock(a, b);
      v.fail("undock accepted from " + std::string(to_string(p)));
    } catch (const ProtocolError&) {
    }
  }

  // Everything reachable from (Free, Free) is a legal pair.
  std::set<std::pair<int, bool>> seen;
  std::vector<std::pair<DockPort, DockPort>> frontier{{port(0, Face::North, DockPhase::Free), port(1, Face::South, DockPhase::Free)}};
  while (!frontier.empty()) {
    auto [a, b] = frontier.back();
    frontier.pop_back();
    if (!seen.insert({static_cast<int>(a.phase), a.tow}).second) continue;
    std::vector<std::function<void(DockPort&, DockPort&)>> moves;
    for (auto sig : kAllSignals)
      for (bool clear : {false, true})
        for (bool tow : {false, true})
          moves.push_back([=](DockPort& x, DockPort& y) { advance_dock(x, y, {sig, clear, tow, Health::Ok, Health::Ok}); });
    moves.push_back([](DockPort& x, DockPort& y) { undock(x, y); });
    moves.push_back([](DockPort& x, DockPort& y) { undock(y, x); });
    for (auto& m : moves) {
      auto x = a, y = b;
      try {
        m(x, y);
      } catch (const ProtocolError&) {
        continue;
      }
      if (!legal_pairing(x, y)) v.fail("reachable illegal pair");
      frontier.emplace_back(x, y);
    }
  }
  const double dt = seconds_since(t0);
  if (dt >= 1.0) v.fail("took " + std::to_string(dt) + " s");
  if (v.pass) v.detail = std::to_string(combos) + " combinations, " + std::to_string(seen.size()) + " reachable states";
  return v;
}

// ----------------------------------------------------- 3 energy conservation

/// A docked chain of `n` modules with random quantized batteries.
bool share_conserves(Rng& rng) {
  const auto n = static_cast<std::uint32_t>(rng.uniform_int(2, 8));
  Fleet fleet;
  for (std::uint32_t i = 0; i < n; ++i) {
    SpecOverrides ov;
    if (rng.bernoulli(0.5)) ov.emplace("battery_capacity", quantize_energy(rng.uniform(5000.0, 40000.0)));
    const auto id = fleet.add(make_module_spec(static_cast<ModuleClass>(rng.uniform_int(0, 2)), ov),
                              {0.1 * i, 0.0, 0.0});
    auto& st = fleet.state(id);
    st.battery = quantize_energy_down(rng.uniform() * fleet.spec(id).battery_capacity);
  }
  OrganismSet orgs;
  for (std::uint32_t i = 1; i < n; ++i) {
    auto& a = fleet.state(rng.uniform_int(0, i - 1)).port(Face::East);
    auto& b = fleet.state(i).port(Face::West);
    if (a.phase != DockPhase::Free) continue;
    a.phase = b.phase = DockPhase::Docked;
    a.peer = b.ref();
    b.peer = a.ref();
    orgs.register_edge(a, b);
  }
  for (const auto& [id, org] : orgs.all()) {
    double before = 0, after = 0;
    for (auto m : org.nodes) before += fleet.state(m).battery;
    for (int k = 0; k < 20; ++k) share_energy(org, fleet, 1.0, rng.uniform(0.0, 500.0));
    for (auto m : org.nodes) after += fleet.state(m).battery;
    if (before != after) return false;
  }
  return true;
}

Verdict energy_conservation(int scripts, std::uint32_t ticks) {
  Verdict v;
  double worst_rate = 0;
  for (int s = 0; s < scripts && v.pass; ++s) {
    Simulation sim(orgsim::testing::random_scenario(1000 + static_cast<std::uint64_t>(s), ticks),
                   orgsim::testing::random_options(false));
    while (!sim.done()) {
      sim.step();
      if (sim.tick() % 1000 == 0 || sim.done()) {
        const double hours = static_cast<double>(sim.tick()) * sim.config().dt / 3600.0;
        const double rate = std::abs(sim.ledger().residual()) / std::max(hours, 1.0);
        worst_rate = std::max(worst_rate, rate);
        if (rate > 1e-6) v.fail("script " + std::to_string(s) + " residual " + std::to_string(sim.ledger().residual()));
      }
    }
  }
  Rng rng(99);
  for (int i = 0; i < 2000; ++i)
    if (!share_conserves(rng)) {
      v.fail("share_energy changed an organism total");
      break;
    }
  if (v.pass) {
    std::ostringstream o;
    o << scripts << " scripts x " << ticks << " ticks, worst residual " << worst_rate << " J/h; share exact";
    v.detail = o.str();
  }
  return v;
}

// ------------------------------------------------------ 4 reach/torque oracle

Verdict reach_torque_oracle() {
  Verdict v;
  // Independent arithmetic: holding torque of modules at arms 1, 2, 3 edges.
  const double g = 9.81, mass = 1.0, edge = 0.1;
  double oracle = 0;
  for (int k = 1; k <= 3; ++k) oracle += mass * g * k * edge;

  for (auto base_cls : {ModuleClass::Backbone, ModuleClass::Scout}) {
    Fleet fleet;
    const auto base = fleet.add(make_module_spec(base_cls), {0, 0, 0});
    std::vector<ModuleId> chain;
    for (int k = 1; k <= 3; ++k) chain.push_back(fleet.add(make_module_spec(ModuleClass::Scout), {0.1 * k, 0, 0}));
    const double t = required_lift_torque(chain, fleet);
    if (std::abs(t - oracle) > 1e-12) v.fail("torque " + std::to_string(t) + " != " + std::to_string(oracle));
    const bool feasible = lift_feasible({base, 0, chain}, fleet);
    const bool expect = base_cls == ModuleClass::Backbone;
    if (feasible != expect) v.fail(std::string(to_string(base_cls)) + " base feasibility wrong");
    const double reach = reach_height({base, 0, chain}, fleet);
    if (expect && std::abs(reach - 0.4) > 1e-12) v.fail("stack reach " + std::to_string(reach));
    if (!expect && std::abs(reach - 0.1) > 1e-12) v.fail("infeasible stack reach " + std::to_string(reach));
  }
  Socket socket;
  socket.height = 0.35;
  if (!recharge_access(0.4, socket, true)) v.fail("0.4 m stack cannot reach a 0.35 m socket");
  for (auto c : kAllClasses)
    if (recharge_access(make_module_spec(c).edge_length, socket, true)) v.fail("singleton reaches 0.35 m");
  if (std::abs(oracle - 5.886) > 1e-12) v.fail("oracle arithmetic");
  if (v.pass) v.detail = "5.886 N*m: backbone feasible, scout not; 0.4 m reaches 0.35 m";
  return v;
}

// ------------------------------------------------------------ 5 determinism

Verdict determinism() {
  Verdict v;
  const auto cfg = load_config(data("configs/desk_scale.ini"));
  EngineOptions opt;
  opt.keep_log_text = false;
  std::set<std::string> digests;
  for (int i = 0; i < 5; ++i) digests.insert(run_scenario(cfg, opt).metrics.log_digest);
  if (digests.size() != 1) v.fail(std::to_string(digests.size()) + " distinct digests over 5 runs");

  const auto t0 = Clock::now();
  const auto results = sweep(cfg, parse_seed_range("1..8"), 0, opt);
  const double dt = seconds_since(t0);
  if (results.size() != 8) v.fail("sweep returned " + std::to_string(results.size()) + " results");
  if (dt >= 300.0) v.fail("8-seed sweep took " + std::to_string(dt) + " s");
  if (v.pass) {
    std::ostringstream o;
    o << "digest " << *digests.begin() << " x5; 8-seed sweep " << dt << " s";
    v.detail = o.str();
  }
  return v;
}

// ------------------------------------------------------- 6 survival dynamics

Verdict survival_dynamics() {
  Verdict v;
  EngineOptions opt;
  opt.keep_log_text = false;
  std::ostringstream o;

  const auto zero = run_scenario(load_config(data("tests/fixtures/zero_sockets.ini")), opt).metrics;
  if (zero.survivors != 0) v.fail("zero sockets: " + std::to_string(zero.survivors) + " survivors");
  if (zero.energy_dead != zero.roster || zero.hardware_dead != 0) v.fail("zero sockets: deaths not all EnergyDead");

  const auto ample = run_scenario(load_config(data("tests/fixtures/ample_sockets.ini")), opt).metrics;
  if (ample.survivors != ample.roster)
    v.fail("ample sockets: " + std::to_string(ample.survivors) + "/" + std::to_string(ample.roster) + " survived");

  const auto hazard_cfg = load_config(data("tests/fixtures/hazard.ini"));
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= 20; ++s) seeds.push_back(s);
  double total = 0;
  for (const auto& m : sweep(hazard_cfg, seeds, 0, opt)) total += m.hardware_dead;
  const double mu = static_cast<double>(hazard_cfg.roster_size()) *
                    (1.0 - std::exp(-hazard_cfg.hazard_rate * hazard_cfg.days));
  const double expect = 20.0 * mu;
  const double bound = 3.0 * std::sqrt(expect);
  if (std::abs(total - expect) > bound) {
    std::ostringstream f;
    f << "hazard: " << total << " hardware deaths, expected " << expect << " +/- " << bound;
    v.fail(f.str());
  }
  if (v.pass) {
    o << "zero 0/" << zero.roster << " alive; ample " << ample.survivors << "/" << ample.roster << " alive; hazard "
      << total << " vs " << expect << " +/- " << bound;
    v.detail = o.str();
  }
  return v;
}

// ---------------------------------------------------------- 7 guard soundness

Verdict guard_soundness(std::uint64_t proposals) {
  Verdict v;
  std::uint64_t selected = 0, rejected = 0, clamped = 0;
  std::uint64_t seed = 500;
  try {
    while (selected < proposals) {
      Simulation sim(orgsim::testing::random_scenario(seed++, 20000), orgsim::testing::random_options(true));
      while (!sim.done() && selected + sim.stats().selected < proposals) sim.step();
      selected += sim.stats().selected;
      rejected += sim.stats().rejected;
      clamped += sim.stats().clamped;
    }
  } catch (const InvariantBreach& e) {
    v.fail(e.what());
  }
  if (v.pass) {
    std::ostringstream o;
    o << selected << " proposals, " << rejected << " rejected, " << clamped << " clamped, 0 violations";
    v.detail = o.str();
  }
  return v;
}

// ------------------------------------------------------------- 8 disposal

Verdict disposal_task() {
  Verdict v;
  const auto open = run_scenario(load_config(data("tests/fixtures/disposal_open.ini")));
  if (open.metrics.disposed_to_graveyard != 1)
    v.fail("open fixture disposed " + std::to_string(open.metrics.disposed_to_graveyard));
  const auto walled = run_scenario(load_config(data("tests/fixtures/disposal_walled.ini")));
  if (walled.metrics.disposed_to_graveyard != 0)
    v.fail("walled fixture disposed " + std::to_string(walled.metrics.disposed_to_graveyard));
  if (walled.log.find(" task_open task=dispose") == std::string::npos) v.fail("walled fixture did not leave the task open");
  if (v.pass) v.detail = "open: disposed 1; walled: task open, disposed 0";
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Verdict()> run;
  };
  const Criterion criteria[] = {
      {"table_fidelity", table_fidelity},
      {"docking_protocol_soundness", docking_soundness},
      {"energy_conservation", [] { return energy_conservation(1000, 10000); }},
      {"reach_torque_oracle", reach_torque_oracle},
      {"determinism", determinism},
      {"survival_dynamics", survival_dynamics},
      {"guard_soundness", [] { return guard_soundness(100000); }},
      {"disposal_task", disposal_task},
  };
  int failed = 0;
  int n = 0;
  for (const auto& c : criteria) {
    ++n;
    Verdict v;
    const auto t0 = Clock::now();
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.fail(std::string("exception: ") + e.what());
    }
    std::printf("[%s] criterion %d %s (%.1f s): %s\n", v.pass ? "PASS" : "FAIL", n, c.name, seconds_since(t0),
                v.detail.c_str());
    std::fflush(stdout);
    failed += !v.pass;
  }
  std::printf("%d/%d criteria passed\n", n - failed, n);
  return failed == 0 ? 0 : 1;
}
