#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dwre/config.hpp"

namespace dwre::cli {

enum ExitCode : int { kSuccess = 0, kParseError = 1, kValidationError = 2, kCensoredOnly = 3 };

struct RunOptions {
  std::optional<unsigned> workers;  // overrides [run] workers and DWRE_WORKERS
  std::optional<std::string> output;  // overrides [run] output
};

struct RunResult {
  int exit_code = kSuccess;
  std::string message;
  std::vector<std::string> files;  // written, relative to the output directory
};

/// Executes the [run] task of a parsed config and writes its artifacts plus
/// manifest.json under the output directory. Never throws for config or
/// validation problems; they come back as exit codes 1 and 2.
RunResult run(const Config& cfg, const RunOptions& opt = {});
RunResult run_file(const std::string& path, const RunOptions& opt = {});

/// FNV-1a of the config text, as 16 hex digits.
std::string config_hash(const std::string& text);

}  // namespace dwre::cli
