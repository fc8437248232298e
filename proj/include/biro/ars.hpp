#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "biro/policy.hpp"
#include "biro/rng.hpp"

namespace biro {

struct ARSConfig {
  double step_size = 0.01;  // beta
  double noise = 0.01;      // nu
  int num_directions = 16;
  int top_directions = 8;
  std::int64_t episode_length = 10000;
  int iterations = 100;
  std::uint64_t seed = 1;
  double reward_std_floor = 1e-6;

  void validate() const;
};

/// Scalar reward of a policy. Must be deterministic in (M, seed).
using Objective = std::function<double(const PolicyMatrix& M, std::uint64_t seed)>;

struct IterationStats {
  int iteration = 0;
  double mean_reward = 0.0;
  double max_reward = 0.0;
  double std_reward = 0.0;
  double eval_reward = 0.0;  // the updated policy under the fixed evaluation seed
  double best_eval = 0.0;
};

struct TrainState {
  PolicyMatrix current;
  PolicyMatrix best;
  double best_eval = -std::numeric_limits<double>::infinity();
  int iteration = 0;
  std::vector<IterationStats> history;
};

struct PairedReward {
  double plus = 0.0;
  double minus = 0.0;
};

/// N matrices with standard-normal entries where the mask is 1 and exact
/// zeros elsewhere.
std::vector<PolicyEntries> sample_directions(Rng& rng, int n, const PolicyMask& mask);

struct ARSUpdate {
  PolicyMatrix policy;
  double reward_std = 0.0;
  bool degenerate = false;  // every selected reward equal; the update is zero
};

/// Top-b step: rank directions by max(r+, r-), then
/// M' = M + beta / (b sigma) * sum (r+ - r-) delta over the selected ones,
/// sigma being the std of their 2b rewards, floored.
ARSUpdate ars_update(const PolicyMatrix& M, const std::vector<PolicyEntries>& directions,
                     const std::vector<PairedReward>& rewards, const ARSConfig& cfg);

/// Seeds used by train(). Rollouts of direction k in iteration i share one
/// seed for both signs.
std::uint64_t direction_seed(std::uint64_t master, int iteration);
std::uint64_t rollout_seed(std::uint64_t master, int iteration, int direction);
std::uint64_t evaluation_seed(std::uint64_t master);

class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(const std::string& what, TrainState state)
      : std::runtime_error(what), state_(std::move(state)) {}
  const TrainState& state() const { return state_; }

 private:
  TrainState state_;
};

using IterationCallback = std::function<void(const TrainState&)>;

/// Runs cfg.iterations ARS iterations from `init`. The 2N rollouts of an
/// iteration are spread over `parallelism` threads; results do not depend on
/// the thread count. Throws TrainingAborted if the objective throws or returns
/// a non-finite value.
TrainState train(const Objective& objective, const PolicyMatrix& init, const ARSConfig& cfg,
                 int parallelism = 1, const IterationCallback& on_iteration = {});

/// Runs fn(0..n-1) on up to `threads` workers.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace biro
