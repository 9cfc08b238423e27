#include "orgsim/harness.hpp"

#include <atomic>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "orgsim/error.hpp"

namespace orgsim {

RunResult run_scenario(const ScenarioConfig& config, const EngineOptions& options) {
  Simulation sim(config, options);
  RunResult r;
  r.metrics = sim.run();
  r.log = sim.log().text();
  return r;
}

void write_outputs(const RunResult& result, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto seed = std::to_string(result.metrics.seed);
  const auto base = std::filesystem::path(dir);
  if (!result.log.empty()) {
    std::ofstream f(base / ("run_" + seed + ".log"), std::ios::binary);
    if (!f) throw Error("cannot write to '" + dir + "'");
    f << result.log;
  }
  std::ofstream f(base / ("metrics_" + seed + ".json"), std::ios::binary);
  if (!f) throw Error("cannot write to '" + dir + "'");
  f << result.metrics.to_json() << "\n";
}

RunMetrics replay_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read log file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return replay_log(ss.str());
}

std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
  auto number = [&](std::string_view s) {
    std::uint64_t v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
      throw ArgumentError("bad seed '" + std::string(s) + "'");
    return v;
  };
  const auto dots = text.find("..");
  if (dots == std::string::npos) return {number(text)};
  const auto a = number(std::string_view(text).substr(0, dots));
  const auto b = number(std::string_view(text).substr(dots + 2));
  if (b < a) throw ArgumentError("seed range '" + text + "' is empty");
  if (b - a >= 1'000'000) throw ArgumentError("seed range '" + text + "' is too large");
  std::vector<std::uint64_t> out;
  for (auto s = a; s <= b; ++s) out.push_back(s);
  return out;
}

std::vector<RunMetrics> sweep(const ScenarioConfig& config, const std::vector<std::uint64_t>& seeds, unsigned threads,
                              const EngineOptions& options) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, seeds.size())));
  std::vector<RunMetrics> out(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        ScenarioConfig c = config;
        c.seed = seeds[i];
        EngineOptions o = options;
        o.keep_log_text = false;
        o.log_mirror = nullptr;
        Simulation sim(c, o);
        out[i] = sim.run();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace orgsim
