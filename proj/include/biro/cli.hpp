#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "biro/ars.hpp"
#include "biro/config.hpp"
#include "biro/sim.hpp"

namespace biro {

/// Environment variable that relocates relative output directories.
inline constexpr const char* kOutputRootEnv = "BIRO_OUTPUT_ROOT";

/// Relative paths go under $BIRO_OUTPUT_ROOT when it is set.
std::filesystem::path resolve_output_dir(const std::filesystem::path& p);

/// Training objective: one rollout of cfg.ars.episode_length steps on a
/// terrain drawn from the training set with the episode seed; returns the
/// summed reward.
Objective make_objective(const ExperimentConfig& cfg);

/// Seed of evaluation episode `episode`.
std::uint64_t eval_episode_seed(std::uint64_t master, int episode);

/// Runs one evaluation episode of cfg.eval.steps steps with the eval noise.
RolloutResult evaluate_episode(const PolicyMatrix& M, const ExperimentConfig& cfg,
                               const Terrain& terrain, std::uint64_t seed, bool record_trace);

/// The initial policy named by the config, or the zero policy.
PolicyMatrix initial_policy(const ExperimentConfig& cfg);

struct TrainOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  std::optional<std::filesystem::path> out;
  int jobs = 1;
};

struct EvalOptions {
  std::filesystem::path policy;
  std::filesystem::path config;
  std::optional<std::string> terrain;
  std::optional<int> episodes;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
};

struct IkCheckOptions {
  int samples = 10000;
  std::optional<std::filesystem::path> config;
  std::uint64_t seed = 1;
};

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;   // a check failed or training diverged
inline constexpr int kExitInvalid = 2;  // bad input: config, policy or trace

/// Writes manifest.json, config.json, policy_init.txt, train_log.csv,
/// checkpoints/ and policy_final.txt / policy_best.txt into the run
/// directory.
int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err);

/// Prints a per-episode summary and writes eval_summary.csv plus one trace
/// CSV per episode.
int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err);

/// Converts a trace CSV into time,roll_deg,pitch_deg,yaw_deg.
int cmd_plot(const std::filesystem::path& trace, const std::filesystem::path& output,
             std::ostream& out, std::ostream& err);

int cmd_ik_check(const IkCheckOptions& opt, std::ostream& out, std::ostream& err);

/// Full command-line dispatch; returns the exit code.
int run_cli(int argc, char** argv);

}  // namespace biro
