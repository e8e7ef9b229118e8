#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"
#include "swstab_cli/config.hpp"

namespace swstab_cli {

/// Command-line flags that refine a command; unset optionals defer to the
/// config file's values.
struct RunFlags {
  std::string criterion;
  bool want_trace = false;
  std::optional<int> horizon;
  std::optional<int> trials;
  std::optional<int> length;
  std::optional<int> samples;
  std::optional<std::uint64_t> seed;
};

struct RunResult {
  nlohmann::json report;
  std::string human;
  std::string trace;  // CSV, filled only when flags.want_trace
  int exit_code = 0;
};

/// Executes one command against a parsed config. Commands: loops, decompose,
/// bounds, certify, simulate, validate, synth. Throws swstab::Error for
/// input and numerical failures; the caller maps categories to exit codes.
[[nodiscard]] RunResult run_command(const std::string& command, const ProblemConfig& cfg,
                                    const RunFlags& flags);

}  // namespace swstab_cli
