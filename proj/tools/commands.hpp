#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "config.hpp"

namespace kfbias::cli {

struct CommandOptions {
  std::optional<std::filesystem::path> out_dir;  // --out; else config directory
  std::optional<std::uint64_t> seed_override;
  std::optional<int> replications_override;
  std::string corrupt_entry;  // validate-only test hook
};

// Exit codes: 0 success, 1 validation failure, 2 config error, 3 numeric
// error. The cmd_* functions throw (ConfigError / NumericError / ...);
// run_command maps exceptions to codes and prints them to stderr.
int cmd_ar1_demo(const ScenarioConfig& cfg, const CommandOptions& opts);
int cmd_propagate(const ScenarioConfig& cfg, const CommandOptions& opts);
int cmd_validate(const ScenarioConfig& cfg, const CommandOptions& opts);
int cmd_order_check(const ScenarioConfig& cfg, const CommandOptions& opts);

int run_command(const std::string& name, const ScenarioConfig& cfg,
                const CommandOptions& opts);

}  // namespace kfbias::cli
