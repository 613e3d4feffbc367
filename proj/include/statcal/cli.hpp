#pragma once

#include "statcal/experiments.hpp"
#include "statcal/record_io.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace statcal {

enum ExitCode : int {
  exit_ok = 0,
  exit_acceptance_failed = 1,
  exit_usage = 2,
  exit_divergence = 3,
};

/// Everything a `run` needs, as read from a config file and flags.
struct RunSettings {
  std::string experiment;
  ExperimentOverrides overrides;
  RecordFormat format = RecordFormat::csv;
};

/// Reads a TOML file with [run], [model], [objective] and [schedule]
/// tables. Unknown tables or keys and mistyped values throw ConfigError.
RunSettings load_config(const std::filesystem::path& path);
RunSettings parse_config(std::string_view toml_text, std::string_view source = "config");

/// TOML echo of every effective setting of a configured run; loading it
/// reproduces the run.
std::string config_echo(const RunSettings& settings, const BuiltinSetup& setup);

/// Applies one `key=value` assignment, as used by sweep grids.
void apply_setting(RunSettings& settings, std::string_view key, std::string_view value);

/// Parses and executes a command line; argv[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace statcal
