// mecake: run one scenario of the three-party key-establishment model and
// report the verdict.
//
// Exit status: 0 when the scenario met its expectation (honest runs agree,
// attacks succeed, controls reject), 1 when it did not, 2 on usage errors.
// Output is deterministic in (--scenario, --seed, knobs).

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mecake/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "Three-party authenticated key establishment: honest runs, attack "
      "demonstrations, and rejection controls"};

  std::string scenario_arg;
  std::uint64_t seed = 0;
  int sessions = 10;
  int k_gap = 1;
  std::uint64_t delta_t_ms = mecake::protocol::kDefaultFreshnessWindowMs;
  std::string out_path;
  std::string format = "json";
  bool verbose = false;

  app.add_option("--scenario", scenario_arg,
                 "one of: honest, key-computation, impersonation, "
                 "traceability, curious-rc, replay-control, tamper-control")
      ->required();
  app.add_option("--seed", seed, "world seed (default 0)");
  app.add_option("--sessions", sessions, "sessions to run (default 10)")
      ->check(CLI::Range(1, 1'000'000));
  app.add_option("--k-gap", k_gap,
                 "sessions between insider contact and the attacked session "
                 "(default 1)")
      ->check(CLI::Range(1, 1'000'000));
  app.add_option("--delta-t-ms", delta_t_ms,
                 "freshness window in milliseconds (default 2000)");
  app.add_option("--out", out_path, "write the JSON-lines report here");
  app.add_option("--format", format, "stdout format (default json)")
      ->check(CLI::IsMember({"json", "text"}));
  app.add_flag("--verbose", verbose, "include every tapped message");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const auto scenario = mecake::harness::parse_scenario(scenario_arg);
  if (!scenario) {
    std::cerr << "unknown scenario: " << scenario_arg << "\n"
              << app.help() << "\n";
    return 2;
  }

  mecake::harness::ScenarioConfig config;
  config.scenario = *scenario;
  config.seed = seed;
  config.n_sessions = sessions;
  config.k_gap = k_gap;
  config.delta_t_ms = delta_t_ms;

  mecake::harness::RunReport report;
  try {
    report = mecake::harness::run_scenario(config);
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    // the scenario could not be driven to a verdict at all
    std::cerr << "scenario aborted: " << e.what() << "\n";
    return 1;
  }

  const std::string jsonl = mecake::harness::report_to_jsonl(report, verbose);
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
      std::cerr << "cannot open output file: " << out_path << "\n";
      return 2;
    }
    out << jsonl;
  }
  if (format == "json")
    std::cout << jsonl;
  else
    std::cout << mecake::harness::report_to_text(report, verbose);

  return report.verdict ? 0 : 1;
}
