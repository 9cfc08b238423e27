// orgsim command-line front end: run, validate, replay, sweep.

#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "orgsim/error.hpp"
#include "orgsim/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitBreach = 3;

void print_findings(const std::vector<std::string>& findings) {
  for (const auto& f : findings) std::cerr << "  " << f << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Modular robot organism simulator"};
  app.require_subcommand(1);

  std::string config_path, log_path, out_dir, seeds_text;
  std::optional<std::uint64_t> seed, ticks;
  unsigned threads = 0;

  auto* run = app.add_subcommand("run", "Run one scenario");
  run->add_option("--config", config_path, "Scenario config (INI)")->required();
  run->add_option("--seed", seed, "Master seed (overrides the config)");
  run->add_option("--ticks", ticks, "Stop after this many ticks");
  run->add_option("--out", out_dir, "Output directory (default: [output] dir)");

  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("--config", config_path, "Scenario config (INI)")->required();

  auto* replay = app.add_subcommand("replay", "Recompute metrics from an event log");
  replay->add_option("--log", log_path, "Event log")->required();

  auto* sweep = app.add_subcommand("sweep", "Run a range of seeds");
  sweep->add_option("--config", config_path, "Scenario config (INI)")->required();
  sweep->add_option("--seeds", seeds_text, "Seed range A..B")->required();
  sweep->add_option("--threads", threads, "Worker threads (0 = all cores)");
  sweep->add_option("--out", out_dir, "Output directory (default: [output] dir)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      const auto findings = orgsim::validate_config_file(config_path);
      if (findings.empty()) {
        std::cout << "valid: " << config_path << "\n";
        return kExitOk;
      }
      std::cerr << findings.size() << " finding(s) in " << config_path << ":\n";
      print_findings(findings);
      return kExitInvalid;
    }
    if (*replay) {
      std::cout << orgsim::replay_file(log_path).to_json() << "\n";
      return kExitOk;
    }

    auto config = orgsim::load_config(config_path);
    if (out_dir.empty()) out_dir = config.out_dir;
    if (*run) {
      if (seed) config.seed = *seed;
      orgsim::EngineOptions opts;
      opts.ticks = ticks;
      const auto result = orgsim::run_scenario(config, opts);
      orgsim::write_outputs(result, out_dir);
      std::cout << result.metrics.to_json() << "\n";
      return kExitOk;
    }
    if (*sweep) {
      const auto seeds = orgsim::parse_seed_range(seeds_text);
      const auto results = orgsim::sweep(config, seeds, threads);
      nlohmann::ordered_json summary = nlohmann::ordered_json::array();
      for (const auto& m : results) {
        orgsim::write_outputs({m, {}}, out_dir);
        summary.push_back({{"seed", m.seed},
                           {"survivors", m.survivors},
                           {"energy_dead", m.energy_dead},
                           {"hardware_dead", m.hardware_dead},
                           {"disposed_to_graveyard", m.disposed_to_graveyard},
                           {"log_digest", m.log_digest}});
      }
      std::cout << summary.dump(2) << "\n";
      return kExitOk;
    }
  } catch (const orgsim::ValidationError& e) {
    std::cerr << "invalid config:\n";
    print_findings(e.findings());
    return kExitInvalid;
  } catch (const orgsim::InvariantBreach& e) {
    std::cerr << "aborted: " << e.what() << "\n";
    return kExitBreach;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
