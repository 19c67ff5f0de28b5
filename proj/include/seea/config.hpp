#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "seea/evolve.hpp"

namespace seea::config {

struct ConfigError : std::runtime_error {
  int line = 0;
  std::string field;
  ConfigError(const std::string& msg, int line_, std::string field_)
      : std::runtime_error(msg), line(line_), field(std::move(field_)) {}
};

/// Flat sectioned key-value text: `[section]` headers, `key = value` lines,
/// `#` comments. Unknown sections or keys are errors.
evolve::RunConfig parse_config_text(const std::string& text);
evolve::RunConfig load_config_file(const std::string& path);

/// Canonical serialization: fixed section and key order; hashing this text
/// gives the config hash printed by every command.
std::string serialize_config(const evolve::RunConfig& cfg);
std::uint64_t config_hash(const evolve::RunConfig& cfg);

/// Applies SEEA_<SECTION>_<KEY>=value environment overrides.
void apply_env_overrides(evolve::RunConfig& cfg);

evolve::RunConfig default_config();
/// Small-budget preset used by the self-evolution acceptance runs.
evolve::RunConfig fast_preset();
/// Large-scale hyperparameters for long runs, kept as a documented preset.
evolve::RunConfig full_preset();

evolve::RunConfig preset_by_name(const std::string& name);  // default|fast|full

}  // namespace seea::config
