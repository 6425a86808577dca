#pragma once

// Flat "key = value" run configuration. Lines starting with '#' and blank lines
// are ignored; trailing "# ..." comments are stripped. Keys are dotted names such
// as train.batch_size. Command-line overrides are applied after the file.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "rbd/metrics.hpp"
#include "rbd/scenario.hpp"
#include "rbd/train.hpp"

namespace rbd {

struct RunConfig {
  ScenarioConfig scenario;
  double duration = 5.0;
  double fine_dt = kDefaultFineDt;
  std::size_t scenarios = 1000;
  std::uint64_t data_seed = 1;
  std::uint64_t split_seed = 7;
  unsigned threads = 0;  // 0: hardware concurrency
  nn::NetworkConfig network;
  nn::TrainConfig train;
  SuiteOptions eval;
};

struct ConfigKey {
  std::string name;
  std::string help;
};

/// Every accepted key with a one-line description, in documentation order.
const std::vector<ConfigKey>& config_keys();

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Splits config text into key/value pairs. Throws Errc::invalid_argument naming
/// the line for malformed lines.
ConfigEntries parse_config_text(std::string_view text);

/// Sets one key. Throws Errc::invalid_argument for unknown keys or bad values.
void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value);

/// Validates every section of the configuration.
void validate(const RunConfig& cfg);

/// Defaults, then `file` (if nonempty), then `overrides`; validated.
RunConfig load_run_config(const std::filesystem::path& file, const ConfigEntries& overrides = {});

/// Canonical text form; parsing it reproduces the same configuration.
std::string to_config_text(const RunConfig& cfg);

}  // namespace rbd
