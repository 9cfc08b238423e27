#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "orgsim/docking.hpp"
#include "orgsim/organism.hpp"
#include "orgsim/rng.hpp"
#include "orgsim/robot_model.hpp"
#include "orgsim/world.hpp"

namespace orgsim {

// ---------------------------------------------------------------- actions

struct IdleAction {
  bool operator==(const IdleAction&) const = default;
};
/// Singletons drive themselves. An organism leader's Drive moves the whole
/// organism: a pure turn (no forward/lateral) rotates it, anything else translates.
struct DriveAction {
  DriveCommand cmd;
  bool operator==(const DriveAction&) const = default;
};
struct ActuateAction {
  int dof = 0;
  double target = 0;  // deg
  bool operator==(const ActuateAction&) const = default;
};
struct DockAction {
  Face face = Face::North;
  ModuleId peer = 0;
  Face peer_face = Face::South;
  bool operator==(const DockAction&) const = default;
};
struct UndockAction {
  Face face = Face::North;
  bool operator==(const UndockAction&) const = default;
};
struct RechargeAction {
  SocketId socket = 0;
  bool operator==(const RechargeAction&) const = default;
};
struct ToggleCoprocessorAction {
  bool operator==(const ToggleCoprocessorAction&) const = default;
};
/// Dock onto a dead module for disposal; faces are picked geometrically.
struct TowAction {
  ModuleId target = 0;
  bool operator==(const TowAction&) const = default;
};

using Action = std::variant<IdleAction, DriveAction, ActuateAction, DockAction, UndockAction, RechargeAction,
                            ToggleCoprocessorAction, TowAction>;
std::string_view action_name(const Action& a);

using ControllerId = std::uint32_t;
inline constexpr ControllerId kNoController = 0xFFFFFFFFu;

/// Priority bands (lower is more urgent).
namespace priority {
inline constexpr std::uint8_t kProtection = 0;     // 0..31
inline constexpr std::uint8_t kCriticalEnergy = 10;
inline constexpr std::uint8_t kEnergy = 40;        // 32..95
inline constexpr std::uint8_t kTask = 100;         // 96..159
inline constexpr std::uint8_t kExplore = 200;      // 160..255
}  // namespace priority

struct ActionProposal {
  ControllerId source = kNoController;
  std::uint8_t priority = 255;
  Action action = IdleAction{};
  bool operator==(const ActionProposal&) const = default;
};

// --------------------------------------------------------------- messages

inline constexpr ModuleId kBroadcast = 0xFFFFFFFFu;

/// A module's current deliberative goal, as advertised to others.
struct GoalRecord {
  enum class Kind : std::uint8_t { None, Crew, Dispose };
  Kind kind = Kind::None;
  std::uint32_t target = 0;  // socket id (Crew) or dead module id (Dispose)
  int slot = 0;              // chain slot (Crew) or side 0/1 (Dispose)
  bool operator==(const GoalRecord&) const = default;
};

struct DeadSighting {
  ModuleId id = 0;
  Pose pose;
  bool in_graveyard = false;
};

/// Periodic gossip: everything the planner needs to know about the sender.
struct StatusPayload {
  ModuleClass cls = ModuleClass::Scout;
  Pose pose;
  double battery_fraction = 0;
  GoalRecord goal;
  std::uint8_t docked_mask = 0;  // bit f set: port f Docked
  std::vector<SensedSocket> sockets;
  std::vector<DeadSighting> dead;
  std::vector<ModuleId> disposed;
};

using Payload = std::variant<std::string, StatusPayload>;

struct Message {
  ModuleId from = 0;
  ModuleId to = 0;
  std::uint64_t sent_tick = 0;
  Payload payload;
};

/// Message-based middleware. Messages sent during tick t are delivered at
/// t + 1. Each destination accepts at most `capacity` messages per tick; the
/// overflow is dropped and counted on the destination's bus-load counter.
class MessageBus {
 public:
  enum class SendResult { Queued, Dropped, Refused };

  explicit MessageBus(std::size_t capacity = 64, double radio_range = 5.0)
      : capacity_(capacity), radio_range_(radio_range) {}

  /// Reachable: same organism (intra-organism bus) or within radio range.
  bool reachable(const OrganismSet& organisms, const Fleet& fleet, ModuleId from, ModuleId to) const;

  SendResult send(const OrganismSet& organisms, const Fleet& fleet, Message msg, std::uint64_t tick);

  /// Start tick `tick`: last tick's sends become deliverable.
  void advance(std::uint64_t tick);
  /// Messages deliverable to `to` this tick, in send order.
  std::vector<Message> collect(ModuleId to);

  std::uint32_t bus_load(ModuleId m) const;
  double radio_range() const { return radio_range_; }

 private:
  std::size_t capacity_;
  double radio_range_;
  std::uint64_t tick_ = 0;
  std::map<ModuleId, std::vector<Message>> next_;
  std::map<ModuleId, std::vector<Message>> ready_;
  std::unordered_map<ModuleId, std::uint32_t> load_;
};

// ------------------------------------------------------------ observation

struct PortView {
  DockPhase phase = DockPhase::Free;
  std::optional<PortRef> peer;
  bool tow = false;
};

struct SensedModule {
  ModuleId id = 0;
  ModuleClass cls = ModuleClass::Scout;
  Pose pose;
  Health health = Health::Ok;
  bool in_graveyard = false;
  std::array<DockPhase, 4> ports{};
};

struct NeighborView {
  ModuleId id = 0;
  ModuleClass cls = ModuleClass::Scout;
  Face my_face = Face::North;
  Face their_face = Face::South;
  double battery_fraction = 0;
  std::vector<double> joint_angles;
  Pose pose;
  Health health = Health::Ok;
};

struct MemberView {
  ModuleId id = 0;
  ModuleClass cls = ModuleClass::Scout;
  Pose pose;
  Health health = Health::Ok;
};

struct TerrainSample {
  CellIndex cell;
  TerrainClass terrain = TerrainClass::Plain;
};

enum class Outcome : std::uint8_t { None, Executed, Rejected, Refused, Blocked };

class ModuleMemory;

/// Everything a controller may know, grouped by the four sensing channels.
/// Holds values only (plus the module's own fused memory); there is no path
/// from here to the world, other modules' state, or other controllers.
struct Observation {
  std::uint64_t tick = 0;
  double dt = 1.0;
  ModuleId id = 0;
  ModuleSpec spec;

  // Global approximation: the module's own fused map, coverage and gossip.
  const ModuleMemory* memory = nullptr;
  GridRect graveyard;  // mission parameter
  int arena_width = 0;
  int arena_height = 0;
  double cell_size = 0.1;

  // Local sensing.
  Pose pose;
  CellIndex cell;
  bool in_graveyard = false;
  std::vector<SensedSocket> sockets;
  std::vector<SensedModule> nearby;
  std::vector<TerrainSample> terrain;  // cells newly in sensor range

  // Robot-robot interaction and communication.
  std::vector<NeighborView> docked;
  std::optional<OrganismId> organism;
  std::vector<MemberView> organism_members;  // including self
  bool is_leader = false;
  std::vector<Message> inbox;

  // Internal state.
  Health health = Health::Ok;
  double battery_fraction = 0;
  std::array<PortView, 4> ports{};
  std::vector<double> joint_angles;
  bool coprocessor_on = false;
  std::uint32_t bus_load = 0;
  Outcome last_outcome = Outcome::None;
  std::string_view last_action = "idle";
};

static_assert(std::is_copy_constructible_v<Observation> && std::is_default_constructible_v<Observation>);

struct GossipEntry {
  StatusPayload status;
  std::uint64_t sent_tick = 0;
};

/// Per-module sensor fusion: terrain learned so far, visited cells, and the
/// latest status heard from each peer. Fed only from the module's own
/// observations and messages.
class ModuleMemory {
 public:
  ModuleMemory() = default;
  ModuleMemory(int width, int height);

  void integrate(const Observation& obs);
  void record_status(ModuleId from, const StatusPayload& status, std::uint64_t sent_tick);

  /// Known terrain, or nullopt when never sensed.
  std::optional<TerrainClass> known(CellIndex c) const;
  bool in_bounds(CellIndex c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t visited_count() const { return visited_count_; }
  double coverage_fraction() const;
  bool visited(CellIndex c) const;
  const std::map<ModuleId, GossipEntry>& gossip() const { return gossip_; }

 private:
  std::size_t index(CellIndex c) const { return static_cast<std::size_t>(c.y) * width_ + c.x; }
  int width_ = 0;
  int height_ = 0;
  std::vector<std::int8_t> terrain_;
  std::vector<std::uint8_t> visited_;
  std::size_t visited_count_ = 0;
  std::map<ModuleId, GossipEntry> gossip_;
};

// ------------------------------------------------------------ controllers

/// Per-call handle a controller uses to act. At most `budget` proposals.
class ControllerContext {
 public:
  ControllerContext(ControllerId id, std::string_view name, Rng& rng, std::size_t budget)
      : id_(id), name_(name), rng_(rng), budget_(budget) {}

  void propose(std::uint8_t priority, Action action);
  void send(ModuleId to, Payload payload);
  Rng& rng() { return rng_; }

  std::vector<ActionProposal>& proposals() { return proposals_; }
  std::vector<std::pair<ModuleId, Payload>>& outbox() { return outbox_; }

 private:
  ControllerId id_;
  std::string_view name_;
  Rng& rng_;
  std::size_t budget_;
  std::vector<ActionProposal> proposals_;
  std::vector<std::pair<ModuleId, Payload>> outbox_;
};

/// An independent controller process. Its memory is its own object state.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string_view name() const = 0;
  virtual void step(const Observation& obs, ControllerContext& ctx) = 0;
};

struct ControllerSlot {
  std::unique_ptr<Controller> controller;
  Rng rng;
};

struct ControllerOutput {
  std::vector<ActionProposal> proposals;  // registration order
  std::vector<std::pair<ModuleId, Payload>> outbox;
};

ControllerOutput step_controllers(const Observation& obs, std::span<ControllerSlot> controllers,
                                  std::size_t budget = 1);

/// Lowest priority number wins; ties go to the earlier-registered source.
ActionProposal select_action(std::span<const ActionProposal> proposals);

// ------------------------------------------------------------------ guard

enum class RejectReason : std::uint8_t { Collision, Overload, Protocol, InvalidCommand };
std::string_view to_string(RejectReason r);

struct Rejected {
  RejectReason reason = RejectReason::Protocol;
  std::string detail;
};

using GuardResult = std::variant<Action, Rejected>;

/// What the guard may inspect: physical state and the docking attempt table.
struct GuardView {
  const Fleet& fleet;
  const OrganismSet& organisms;
  TerrainLookup terrain;
  double dt = 1.0;
  /// Other port of the in-progress attempt `port` takes part in, if any.
  std::function<std::optional<PortRef>(PortRef)> attempt_partner;
};

/// Faces used when `self` tows `target`: the ones pointing most directly at each other.
std::pair<Face, Face> tow_faces(const ModuleState& self, const ModuleState& target);

/// Hardware protection between selection and execution: reject or clamp.
GuardResult guard(const Action& action, const ModuleState& state, const GuardView& view);

/// Maps a leader's Drive onto organism motion.
OrganismDriveCommand organism_command(const DriveCommand& cmd);

// ---------------------------------------------------------------- fitness

struct FitnessVector {
  double global_approx = 0;  // fraction of arena cells in own coverage memory
  double local = 0;          // 1 / (1 + distance to nearest sensed active socket)
  double interaction = 0;    // docked ports / 4
  double internal = 0;       // battery fraction
  double sum() const { return global_approx + local + interaction + internal; }
};

FitnessVector fitness(const Observation& obs, const ModuleMemory& memory);

}  // namespace orgsim
