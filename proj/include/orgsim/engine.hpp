#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "orgsim/config.hpp"
#include "orgsim/control.hpp"
#include "orgsim/energy.hpp"
#include "orgsim/event_log.hpp"
#include "orgsim/organism.hpp"
#include "orgsim/world.hpp"

namespace orgsim {

using ControllerFactory = std::function<std::unique_ptr<Controller>(ModuleId, ModuleClass)>;

struct EngineOptions {
  /// Controllers a scenario may name besides the built-ins.
  std::map<std::string, ControllerFactory, std::less<>> extra_controllers;
  std::optional<std::uint64_t> ticks;  // overrides days * ticks_per_day
  bool check_invariants = true;
  bool keep_log_text = true;
  std::ostream* log_mirror = nullptr;
  std::size_t proposal_budget = 1;
};

/// Counters for what happened to selected actions.
struct ExecutionStats {
  std::uint64_t selected = 0;
  std::uint64_t executed = 0;
  std::uint64_t rejected = 0;
  std::uint64_t clamped = 0;
  std::uint64_t over_torque = 0;  // executed actuations beyond the rated torque
};

/// The scenario engine. Each tick runs the fixed pipeline
///   schedule -> sense -> controllers -> select -> guard -> execute
///   -> docking advance -> energy -> death/hazard -> metrics.
/// Selection, guarding and execution are applied module by module in id
/// order, so each guard sees the effect of earlier executions.
class Simulation {
 public:
  explicit Simulation(const ScenarioConfig& config, EngineOptions options = {});
  ~Simulation();
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  bool done() const { return tick_ >= total_ticks_; }
  void step();
  /// Runs to the end and closes the log.
  RunMetrics run();
  /// Closes the log early (after the ticks run so far).
  RunMetrics finish();

  std::uint64_t tick() const { return tick_; }
  std::uint64_t total_ticks() const { return total_ticks_; }
  const Fleet& fleet() const { return fleet_; }
  const OrganismSet& organisms() const { return organisms_; }
  const Arena& arena() const { return arena_; }
  const EnergyLedger& ledger() const { return ledger_; }
  const EventLog& log() const { return log_; }
  const ExecutionStats& stats() const { return stats_; }
  const ScenarioConfig& config() const { return config_; }
  /// Throws InvariantBreach naming the first violated invariant.
  void check_invariants() const;

 private:
  struct Attempt {
    PortRef a;
    PortRef b;
    bool tow = false;
    bool touched = false;
    std::uint64_t created = 0;
  };
  struct ModuleRuntime;

  void emit(std::string subject, std::string kind, std::vector<std::pair<std::string, std::string>> fields = {});
  void emit_topology(const std::vector<TopologyEvent>& events);
  void spawn_modules();

  void phase_schedule();
  Observation sense(ModuleId m);
  void act(ModuleId m, const Observation& obs);
  void execute(ModuleId m, const Action& action, ModuleRuntime& rt);
  void execute_dock(ModuleId m, PortRef mine, PortRef theirs, bool tow, ModuleRuntime& rt);
  void phase_docking();
  void phase_energy();
  void phase_hazard();
  void phase_metrics();
  void kill(ModuleId m, Health cause);
  void day_snapshot(std::uint64_t day_index);
  std::optional<PortRef> attempt_partner(PortRef p) const;
  double organism_reach(const Organism& org);

  ScenarioConfig config_;
  EngineOptions options_;
  Arena arena_;
  TerrainLookup terrain_;
  Fleet fleet_;
  OrganismSet organisms_;
  EnergyLedger ledger_;
  EventLog log_;
  MetricsAccumulator metrics_;
  MessageBus bus_;
  std::optional<SocketSchedule> schedule_;
  Rng hazard_rng_;
  double hazard_p_ = 0;

  std::vector<std::unique_ptr<ModuleRuntime>> runtime_;
  std::map<DockEdge, Attempt> attempts_;
  std::map<PortRef, PortRef> partner_;
  std::vector<std::uint8_t> covered_;
  std::size_t covered_count_ = 0;
  std::set<ModuleId> disposed_;
  std::vector<Health> last_health_;
  std::vector<std::pair<ModuleId, SocketId>> recharge_requests_;
  std::map<OrganismId, double> reach_cache_;

  std::uint64_t tick_ = 0;
  std::uint64_t total_ticks_ = 0;
  ExecutionStats stats_;
  std::optional<RunMetrics> result_;
};

}  // namespace orgsim
