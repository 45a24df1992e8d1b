#include <cstdint>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <thread>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "mpdccp/output.hpp"
#include "mpdccp/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

void report(const mpdccp::ValidationError& e) {
  for (const auto& msg : e.errors()) fmt::print(stderr, "error: {}\n", msg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multipath tunnel simulator"};
  app.require_subcommand(1);

  std::string scenario_file;
  std::string canned_name;
  std::optional<std::uint64_t> seed;
  std::string run_out = "out";
  auto* run_cmd = app.add_subcommand("run", "Run one scenario");
  auto* file_opt = run_cmd->add_option("--scenario", scenario_file, "Scenario JSON file");
  auto* canned_opt = run_cmd->add_option("--canned", canned_name, "Name of a built-in scenario");
  file_opt->excludes(canned_opt);
  run_cmd->add_option("--seed", seed, "Override the scenario seed");
  run_cmd->add_option("--out", run_out, "Output directory")->capture_default_str();

  bool as_json = false;
  auto* list_cmd = app.add_subcommand("list-plugins", "List schedulers and reorder modules");
  list_cmd->add_flag("--json", as_json, "Emit a JSON array");

  std::string suite_out = "paper-suite";
  unsigned jobs = 1;
  auto* suite_cmd = app.add_subcommand("paper-suite", "Run every built-in scenario");
  suite_cmd->add_option("--out", suite_out, "Output directory")->capture_default_str();
  suite_cmd->add_option("--jobs", jobs, "Scenarios to run in parallel (0 = hardware threads)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*run_cmd) {
      if (file_opt->count() == 0 && canned_opt->count() == 0) {
        fmt::print(stderr, "error: run needs --scenario or --canned\n");
        return kExitValidation;
      }
      auto config = file_opt->count() ? mpdccp::load_scenario(scenario_file)
                                       : mpdccp::canned_scenario(canned_name);
      if (seed) config.seed = *seed;
      const auto result = mpdccp::run_scenario(config, run_out);
      for (const auto& f : result.files) fmt::print("{}\n", f.string());
      return kExitOk;
    }
    if (*list_cmd) {
      fmt::print("{}", mpdccp::list_plugins(as_json));
      return kExitOk;
    }
    if (*suite_cmd) {
      if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
      for (const auto& name : mpdccp::run_paper_suite(suite_out, jobs)) {
        fmt::print("{}/{}\n", suite_out, name);
      }
      return kExitOk;
    }
  } catch (const mpdccp::ValidationError& e) {
    report(e);
    return kExitValidation;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}
