#include "orgsim/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "orgsim/baseline_controllers.hpp"
#include "orgsim/error.hpp"

namespace orgsim {

namespace pt = boost::property_tree;

std::string format_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::size_t ScenarioConfig::roster_size() const {
  std::size_t n = spawns.size();
  for (const auto& [cls, c] : counts) n += c;
  return n;
}

std::vector<std::pair<std::string, std::string>> ScenarioConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> e;
  auto put = [&](std::string k, std::string v) { e.emplace_back(std::move(k), std::move(v)); };
  put("arena.map", map_path);
  put("arena.allow_any_socket_height", allow_any_socket_height ? "true" : "false");
  for (auto cls : kAllClasses) {
    auto it = counts.find(cls);
    put("roster." + std::string(to_string(cls)), std::to_string(it == counts.end() ? 0 : it->second));
  }
  for (std::size_t i = 0; i < spawns.size(); ++i) {
    const auto& s = spawns[i];
    put("spawn." + std::to_string(i), std::string(to_string(s.cls)) + " " + format_double(s.pose.x) + " " +
                                          format_double(s.pose.y) + " " + format_double(s.pose.heading) +
                                          " battery=" + format_double(s.battery_fraction) +
                                          " health=" + std::string(to_string(s.health)));
  }
  for (const auto& [cls, ov] : overrides)
    for (const auto& [k, v] : ov) put("module." + std::string(to_string(cls)) + "." + k, format_double(v));
  put("tariff.idle", format_double(tariff.idle));
  put("tariff.coprocessor", format_double(tariff.coprocessor));
  put("tariff.locomotion", format_double(tariff.locomotion));
  put("tariff.actuation", format_double(tariff.actuation));
  put("tariff.lock_cost", format_double(tariff.lock_cost));
  put("tariff.recharge_efficiency", format_double(tariff.recharge_efficiency));
  put("schedule.dwell_min", std::to_string(schedule.dwell_min));
  put("schedule.dwell_max", std::to_string(schedule.dwell_max));
  put("schedule.active_count", std::to_string(schedule.active_count));
  put("run.dt", format_double(dt));
  put("run.ticks_per_day", std::to_string(ticks_per_day));
  put("run.days", std::to_string(days));
  put("run.seed", std::to_string(seed));
  put("run.hazard_rate", format_double(hazard_rate));
  put("run.share_rate", format_double(share_rate));
  put("sensing.socket_range", format_double(sensing.socket_range));
  put("sensing.module_range", format_double(sensing.module_range));
  put("sensing.terrain_radius", format_double(sensing.terrain_radius));
  put("sensing.radio_range", format_double(sensing.radio_range));
  put("sensing.bus_capacity", std::to_string(sensing.bus_capacity));
  for (auto cls : kAllClasses) {
    std::string list;
    if (auto it = controllers.find(cls); it != controllers.end())
      for (const auto& n : it->second) list += (list.empty() ? "" : ",") + n;
    put("controllers." + std::string(to_string(cls)), list);
  }
  return e;
}

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::optional<double> to_double(const std::string& s) {
  double v = 0;
  const auto t = trim(s);
  auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> to_uint(const std::string& s) {
  std::uint64_t v = 0;
  const auto t = trim(s);
  auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  if (r.ec != std::errc() || r.ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::optional<bool> to_bool(const std::string& s) {
  const auto t = trim(s);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  return std::nullopt;
}

std::optional<Health> health_from_string(std::string_view s) {
  for (auto h : {Health::Ok, Health::EnergyDead, Health::HardwareDead})
    if (to_string(h) == s) return h;
  return std::nullopt;
}

class Parser {
 public:
  Parser(std::vector<std::string>& findings) : findings_(findings) {}

  void finding(const std::string& field, const std::string& what) { findings_.push_back(field + ": " + what); }

  template <class T, class Conv>
  void read(const std::string& field, const std::string& value, T& out, Conv conv, const char* kind) {
    auto v = conv(value);
    if (!v) {
      finding(field, std::string("expected ") + kind + ", got '" + trim(value) + "'");
      return;
    }
    out = static_cast<T>(*v);
  }
  void real(const std::string& f, const std::string& v, double& out) { read(f, v, out, to_double, "a number"); }
  template <class T>
  void count(const std::string& f, const std::string& v, T& out) {
    auto u = to_uint(v);
    if (!u || *u > std::numeric_limits<T>::max()) {
      finding(f, "expected a non-negative integer, got '" + trim(v) + "'");
      return;
    }
    out = static_cast<T>(*u);
  }
  void flag(const std::string& f, const std::string& v, bool& out) { read(f, v, out, to_bool, "true or false"); }

 private:
  std::vector<std::string>& findings_;
};

ScenarioConfig parse_impl(const std::string& text, const std::string& base_dir, const ControllerNameCheck& extra,
                          std::vector<std::string>& findings) {
  ScenarioConfig cfg;
  Parser p(findings);
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    findings.push_back("config: line " + std::to_string(e.line()) + ": " + e.message());
    return cfg;
  }

  static const std::map<std::string, std::set<std::string>> kSchema{
      {"arena", {"map", "allow_any_socket_height"}},
      {"roster", {"scout", "backbone", "active_wheel"}},
      {"tariff", {"idle", "coprocessor", "locomotion", "actuation", "lock_cost", "recharge_efficiency"}},
      {"schedule", {"dwell_min", "dwell_max", "active_count"}},
      {"run", {"dt", "ticks_per_day", "days", "seed", "hazard_rate", "share_rate"}},
      {"sensing", {"socket_range", "module_range", "terrain_radius", "radio_range", "bus_capacity"}},
      {"controllers", {"scout", "backbone", "active_wheel"}},
      {"output", {"dir"}},
  };

  std::string map_ref;
  std::map<std::uint64_t, std::pair<std::string, std::string>> spawn_lines;
  for (auto cls : kAllClasses) {
    const auto& names = builtin_controller_names();
    cfg.controllers[cls].assign(names.begin(), names.end());
  }

  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      p.finding(section, "key outside any section");
      continue;
    }
    std::optional<ModuleClass> module_section;
    if (section.rfind("module.", 0) == 0) {
      module_section = class_from_string(section.substr(7));
      if (!module_section) {
        p.finding(section, "unknown module class");
        continue;
      }
    } else if (section != "spawn" && !kSchema.count(section)) {
      p.finding(section, "unknown section");
      continue;
    }
    for (const auto& [key, node] : body) {
      const std::string field = section + "." + key;
      const std::string value = node.data();
      if (module_section) {
        double v = 0;
        if (auto d = to_double(value))
          v = *d;
        else {
          p.finding(field, "expected a number");
          continue;
        }
        cfg.overrides[*module_section][key] = v;
        continue;
      }
      if (section == "spawn") {
        auto idx = to_uint(key);
        if (!idx)
          p.finding(field, "spawn keys are module indices");
        else
          spawn_lines[*idx] = {field, value};
        continue;
      }
      if (!kSchema.at(section).count(key)) {
        p.finding(field, "unknown key");
        continue;
      }
      if (section == "arena") {
        if (key == "map") map_ref = trim(value);
        else p.flag(field, value, cfg.allow_any_socket_height);
      } else if (section == "roster") {
        std::uint32_t n = 0;
        p.count(field, value, n);
        cfg.counts[*class_from_string(key)] = n;
      } else if (section == "tariff") {
        double* slots[] = {&cfg.tariff.idle, &cfg.tariff.coprocessor, &cfg.tariff.locomotion,
                           &cfg.tariff.actuation, &cfg.tariff.lock_cost, &cfg.tariff.recharge_efficiency};
        static const char* names[] = {"idle", "coprocessor", "locomotion", "actuation", "lock_cost",
                                      "recharge_efficiency"};
        for (int i = 0; i < 6; ++i)
          if (key == names[i]) p.real(field, value, *slots[i]);
      } else if (section == "schedule") {
        if (key == "dwell_min") p.count(field, value, cfg.schedule.dwell_min);
        if (key == "dwell_max") p.count(field, value, cfg.schedule.dwell_max);
        if (key == "active_count") p.count(field, value, cfg.schedule.active_count);
      } else if (section == "run") {
        if (key == "dt") p.real(field, value, cfg.dt);
        if (key == "ticks_per_day") p.count(field, value, cfg.ticks_per_day);
        if (key == "days") p.count(field, value, cfg.days);
        if (key == "seed") p.count(field, value, cfg.seed);
        if (key == "hazard_rate") p.real(field, value, cfg.hazard_rate);
        if (key == "share_rate") p.real(field, value, cfg.share_rate);
      } else if (section == "sensing") {
        if (key == "socket_range") p.real(field, value, cfg.sensing.socket_range);
        if (key == "module_range") p.real(field, value, cfg.sensing.module_range);
        if (key == "terrain_radius") p.real(field, value, cfg.sensing.terrain_radius);
        if (key == "radio_range") p.real(field, value, cfg.sensing.radio_range);
        if (key == "bus_capacity") p.count(field, value, cfg.sensing.bus_capacity);
      } else if (section == "controllers") {
        std::vector<std::string> names;
        std::set<std::string> seen;
        std::stringstream ss(value);
        for (std::string item; std::getline(ss, item, ',');) {
          item = trim(item);
          if (item.empty()) continue;
          if (!make_builtin_controller(item) && !(extra && extra(item)))
            p.finding(field, "unknown controller '" + item + "'");
          else if (!seen.insert(item).second)
            p.finding(field, "controller '" + item + "' listed twice");
          else
            names.push_back(item);
        }
        cfg.controllers[*class_from_string(key)] = names;
      } else if (section == "output") {
        cfg.out_dir = trim(value);
      }
    }
  }

  // Module envelopes.
  for (const auto& [cls, ov] : cfg.overrides) {
    try {
      make_module_spec(cls, ov);
    } catch (const ConfigError& e) {
      p.finding("module." + std::string(to_string(cls)) + "." + e.field(), e.what());
    }
  }

  // Tariff, run, sensing ranges.
  const auto& t = cfg.tariff;
  for (auto [name, v] : {std::pair{"idle", t.idle}, {"coprocessor", t.coprocessor}, {"locomotion", t.locomotion},
                         {"actuation", t.actuation}, {"lock_cost", t.lock_cost}})
    if (v < 0) p.finding(std::string("tariff.") + name, "must be non-negative");
  if (!(t.recharge_efficiency > 0 && t.recharge_efficiency <= 1))
    p.finding("tariff.recharge_efficiency", "must lie in (0, 1]");
  if (!(cfg.dt > 0)) p.finding("run.dt", "must be positive");
  if (cfg.ticks_per_day == 0) p.finding("run.ticks_per_day", "must be at least 1");
  if (cfg.days == 0) p.finding("run.days", "must be at least 1");
  if (cfg.hazard_rate < 0) p.finding("run.hazard_rate", "must be non-negative");
  if (cfg.share_rate < 0) p.finding("run.share_rate", "must be non-negative");
  for (auto [name, v] : {std::pair{"socket_range", cfg.sensing.socket_range},
                         {"module_range", cfg.sensing.module_range},
                         {"terrain_radius", cfg.sensing.terrain_radius},
                         {"radio_range", cfg.sensing.radio_range}})
    if (!(v > 0)) p.finding(std::string("sensing.") + name, "must be positive");
  if (cfg.sensing.bus_capacity == 0) p.finding("sensing.bus_capacity", "must be at least 1");

  // Arena.
  bool have_arena = false;
  if (map_ref.empty()) {
    p.finding("arena.map", "required");
  } else {
    std::filesystem::path mp(map_ref);
    if (mp.is_relative() && !base_dir.empty()) mp = std::filesystem::path(base_dir) / mp;
    cfg.map_path = mp.lexically_normal().string();
    try {
      cfg.arena = load_map(cfg.map_path);
      have_arena = true;
      for (const auto& f : cfg.arena.findings(cfg.allow_any_socket_height)) p.finding("arena", f);
    } catch (const Error& e) {
      p.finding("arena.map", e.what());
    }
  }

  // Schedule against the socket count.
  if (have_arena) {
    try {
      SocketSchedule(cfg.schedule, cfg.arena.sockets().size());
    } catch (const ConfigError& e) {
      findings.push_back(e.what());
    }
  }

  // Roster.
  for (const auto& [idx, entry] : spawn_lines) {
    const auto& [field, value] = entry;
    std::istringstream ls(value);
    std::string cls_name;
    SpawnSpec s;
    if (!(ls >> cls_name >> s.pose.x >> s.pose.y >> s.pose.heading)) {
      p.finding(field, "expected: class x y heading [battery=F] [health=H]");
      continue;
    }
    auto cls = class_from_string(cls_name);
    if (!cls) {
      p.finding(field, "unknown module class '" + cls_name + "'");
      continue;
    }
    s.cls = *cls;
    s.pose.heading = normalize_heading(s.pose.heading);
    for (std::string opt; ls >> opt;) {
      const auto eq = opt.find('=');
      const std::string k = opt.substr(0, eq), v = eq == std::string::npos ? "" : opt.substr(eq + 1);
      if (k == "battery") {
        auto d = to_double(v);
        if (!d || *d < 0 || *d > 1)
          p.finding(field, "battery must be a fraction in [0, 1]");
        else
          s.battery_fraction = *d;
      } else if (k == "health") {
        auto h = health_from_string(v);
        if (!h)
          p.finding(field, "unknown health '" + v + "'");
        else
          s.health = *h;
      } else {
        p.finding(field, "unknown option '" + opt + "'");
      }
    }
    if (have_arena) {
      const auto t = cfg.arena.terrain_at(s.pose.position());
      if (!t)
        p.finding(field, "pose outside the arena");
      else if (*t == TerrainClass::Obstacle)
        p.finding(field, "pose inside an obstacle");
    }
    cfg.spawns.push_back(s);
  }
  if (cfg.roster_size() == 0) p.finding("roster", "roster has zero modules");
  if (have_arena) {
    std::size_t placed = 0;
    for (const auto& [cls, n] : cfg.counts) placed += n;
    std::size_t room = 0;
    for (int y = 0; y < cfg.arena.height(); ++y)
      for (int x = 0; x < cfg.arena.width(); ++x)
        room += cfg.arena.terrain({x, y}) == TerrainClass::Plain && !cfg.arena.graveyard().contains({x, y});
    if (placed > room) p.finding("roster", "not enough free plain cells to place " + std::to_string(placed) + " modules");
  }
  return cfg;
}

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::string& base_dir,
                            const ControllerNameCheck& extra_controllers) {
  std::vector<std::string> findings;
  auto cfg = parse_impl(text, base_dir, extra_controllers, findings);
  if (!findings.empty()) throw ValidationError(std::move(findings));
  return cfg;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

ScenarioConfig load_config(const std::string& path, const ControllerNameCheck& extra_controllers) {
  auto cfg = parse_config(read_file(path), std::filesystem::path(path).parent_path().string(), extra_controllers);
  cfg.source = path;
  return cfg;
}

std::vector<std::string> validate_config_file(const std::string& path, const ControllerNameCheck& extra_controllers) {
  std::vector<std::string> findings;
  parse_impl(read_file(path), std::filesystem::path(path).parent_path().string(), extra_controllers, findings);
  return findings;
}

}  // namespace orgsim
