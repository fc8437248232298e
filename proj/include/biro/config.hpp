#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "biro/ars.hpp"
#include "biro/sim.hpp"
#include "biro/terrain.hpp"

namespace biro {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct EvalSettings {
  std::int64_t steps = 2000;  // 10 s at 200 Hz
  int episodes = 1;
  std::string terrain = "flat";
  double initial_velocity_noise = 0.0;
};

struct ExperimentConfig {
  RolloutConfig rollout;  // robot, actuator, contact, gait, bounds, reward, limits, command
  TerrainSet terrains;
  std::vector<std::string> train_terrains;  // names drawn per training episode
  ARSConfig ars;
  int checkpoint_every = 10;  // iterations; 0 disables checkpoints
  EvalSettings eval;
  /// Resolved against the config file directory. Empty means the zero policy.
  std::optional<std::filesystem::path> initial_policy;
  std::filesystem::path output_dir;

  /// Terrains used for training, in the order listed.
  TerrainSet training_set() const;
  void validate() const;
};

/// Parses and validates. Unknown keys and missing required keys (terrains,
/// ars, output_dir) raise ConfigError naming the key path. Relative paths are
/// resolved against `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Shortest decimal that reads back to the same double.
std::string format_double(double v);

}  // namespace biro
