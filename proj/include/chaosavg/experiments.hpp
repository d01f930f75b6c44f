#pragma once

// Config-driven experiment runners behind the command line. Each command
// validates its JSON config strictly (unknown fields are rejected), runs,
// writes <out>/<command>.csv and <out>/<command>_verdict.json, and returns
// the verdict document.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace chaosavg {

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides master_seed
  std::string out_dir = "out";
  bool write_files = true;
};

struct RunOutcome {
  bool pass = false;
  std::string verdict_json;
  std::string csv;  // bulk rows, identical to the written CSV file
  std::vector<std::string> files;
};

// Commands: special-check, bm, she, tail-bound, report. Config problems throw
// Error(invalid_config); statistical and numerical failures throw the
// matching code or come back as pass = false.
RunOutcome run_command(const std::string& command, const std::string& config_json, const RunOptions& opt = {});

const std::vector<std::string>& command_names();

// Built-in default config of a command (the one used when no file is given).
std::string default_config(const std::string& command);

}  // namespace chaosavg
