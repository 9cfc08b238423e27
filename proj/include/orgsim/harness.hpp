#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "orgsim/config.hpp"
#include "orgsim/engine.hpp"
#include "orgsim/event_log.hpp"

namespace orgsim {

struct RunResult {
  RunMetrics metrics;
  std::string log;  // full event log text
};

/// One deterministic run; `config.seed` is the master seed.
RunResult run_scenario(const ScenarioConfig& config, const EngineOptions& options = {});

/// Writes `<dir>/run_<seed>.log` and `<dir>/metrics_<seed>.json`.
void write_outputs(const RunResult& result, const std::string& dir);

RunMetrics replay_file(const std::string& path);

/// Parses "A..B" (inclusive) or a single seed.
std::vector<std::uint64_t> parse_seed_range(const std::string& text);

/// Independent runs, one per seed, spread over `threads` workers (0 = hardware
/// concurrency). Results are in seed order. Logs are not kept.
std::vector<RunMetrics> sweep(const ScenarioConfig& config, const std::vector<std::uint64_t>& seeds,
                              unsigned threads = 0, const EngineOptions& options = {});

}  // namespace orgsim
