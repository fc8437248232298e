#include "biro/ars.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace biro {

void ARSConfig::validate() const {
  if (!(step_size > 0.0)) throw std::invalid_argument("ars.step_size must be > 0");
  if (!(noise > 0.0)) throw std::invalid_argument("ars.noise must be > 0");
  if (num_directions < 1) throw std::invalid_argument("ars.num_directions must be >= 1");
  if (top_directions < 1 || top_directions > num_directions) {
    throw std::invalid_argument("ars.top_directions must be in [1, num_directions]");
  }
  if (episode_length < 1) throw std::invalid_argument("ars.episode_length must be >= 1");
  if (iterations < 0) throw std::invalid_argument("ars.iterations must be >= 0");
  if (!(reward_std_floor > 0.0)) throw std::invalid_argument("ars.reward_std_floor must be > 0");
}

std::vector<PolicyEntries> sample_directions(Rng& rng, int n, const PolicyMask& mask) {
  std::vector<PolicyEntries> out(static_cast<std::size_t>(std::max(n, 0)));
  for (auto& d : out) {
    // Draw every entry so the stream does not depend on the mask.
    for (int c = 0; c < kObservationSize; ++c) {
      for (int r = 0; r < kActionSize; ++r) {
        const double z = rng.normal();
        d(r, c) = mask(r, c) != 0.0 ? z : 0.0;
      }
    }
  }
  return out;
}

namespace {

double population_std(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace

ARSUpdate ars_update(const PolicyMatrix& M, const std::vector<PolicyEntries>& directions,
                     const std::vector<PairedReward>& rewards, const ARSConfig& cfg) {
  if (directions.size() != rewards.size()) {
    throw std::invalid_argument("ars_update: one reward pair per direction required");
  }
  for (const auto& r : rewards) {
    if (!std::isfinite(r.plus) || !std::isfinite(r.minus)) {
      throw std::invalid_argument("ars_update: rewards must be finite");
    }
  }
  const int n = static_cast<int>(directions.size());
  const int b = std::min(cfg.top_directions, n);

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  // Stable so that ties keep the sampling order.
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    return std::max(rewards[i].plus, rewards[i].minus) > std::max(rewards[j].plus, rewards[j].minus);
  });

  std::vector<double> selected;
  selected.reserve(2 * static_cast<std::size_t>(b));
  for (int k = 0; k < b; ++k) {
    selected.push_back(rewards[order[k]].plus);
    selected.push_back(rewards[order[k]].minus);
  }
  const double raw_std = population_std(selected);

  ARSUpdate out;
  out.policy = M;
  out.reward_std = std::max(raw_std, cfg.reward_std_floor);
  out.degenerate = raw_std == 0.0;
  if (b == 0 || out.degenerate) return out;

  PolicyEntries step = PolicyEntries::Zero();
  for (int k = 0; k < b; ++k) {
    const auto& r = rewards[order[k]];
    step += (r.plus - r.minus) * directions[order[k]];
  }
  step *= cfg.step_size / (static_cast<double>(b) * out.reward_std);
  out.policy.entries += step.cwiseProduct(M.mask);
  return out;
}

std::uint64_t direction_seed(std::uint64_t master, int iteration) {
  return derive_seed(master, static_cast<std::uint64_t>(iteration), 0);
}

std::uint64_t rollout_seed(std::uint64_t master, int iteration, int direction) {
  return derive_seed(master, static_cast<std::uint64_t>(iteration),
                     static_cast<std::uint64_t>(direction) + 1);
}

std::uint64_t evaluation_seed(std::uint64_t master) {
  return derive_seed(master, ~std::uint64_t{0}, ~std::uint64_t{0});
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  threads = std::clamp(threads, 1, n);
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads - 1));
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

TrainState train(const Objective& objective, const PolicyMatrix& init, const ARSConfig& cfg,
                 int parallelism, const IterationCallback& on_iteration) {
  cfg.validate();
  if (parallelism < 1) throw std::invalid_argument("train: parallelism must be >= 1");
  for (int r = 0; r < kActionSize; ++r) {
    for (int c = 0; c < kObservationSize; ++c) {
      const double m = init.mask(r, c);
      if (m != 0.0 && m != 1.0) throw std::invalid_argument("train: mask entries must be 0 or 1");
    }
  }

  TrainState state;
  state.current = init;
  state.best = init;
  const std::uint64_t eval_seed = evaluation_seed(cfg.seed);

  auto evaluate = [&](const PolicyMatrix& M, std::uint64_t seed) {
    double v = 0.0;
    try {
      v = objective(M, seed);
    } catch (const std::exception& e) {
      throw TrainingAborted(std::string("objective failed: ") + e.what(), state);
    }
    if (!std::isfinite(v)) throw TrainingAborted("objective returned a non-finite reward", state);
    return v;
  };

  state.best_eval = evaluate(init, eval_seed);

  const int n = cfg.num_directions;
  for (int it = 0; it < cfg.iterations; ++it) {
    Rng rng(direction_seed(cfg.seed, it));
    const auto directions = sample_directions(rng, n, state.current.mask);

    std::vector<double> values(2 * static_cast<std::size_t>(n));
    std::vector<std::string> failures(values.size());
    parallel_for(2 * n, parallelism, [&](int job) {
      const int k = job / 2;
      const double sign = job % 2 == 0 ? 1.0 : -1.0;
      PolicyMatrix P = state.current;
      P.entries += sign * cfg.noise * directions[k];
      try {
        values[job] = objective(P, rollout_seed(cfg.seed, it, k));
        if (!std::isfinite(values[job])) failures[job] = "non-finite reward";
      } catch (const std::exception& e) {
        failures[job] = e.what();
      }
    });
    for (std::size_t j = 0; j < failures.size(); ++j) {
      if (!failures[j].empty()) {
        throw TrainingAborted("iteration " + std::to_string(it) + ", rollout " +
                                  std::to_string(j) + ": " + failures[j],
                              state);
      }
    }

    std::vector<PairedReward> pairs(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) pairs[k] = {values[2 * k], values[2 * k + 1]};
    state.current = ars_update(state.current, directions, pairs, cfg).policy;

    IterationStats st;
    st.iteration = it;
    st.mean_reward = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    st.max_reward = *std::max_element(values.begin(), values.end());
    st.std_reward = population_std(values);
    st.eval_reward = evaluate(state.current, eval_seed);
    if (st.eval_reward > state.best_eval) {
      state.best_eval = st.eval_reward;
      state.best = state.current;
    }
    st.best_eval = state.best_eval;
    state.history.push_back(st);
    state.iteration = it + 1;
    if (on_iteration) on_iteration(state);
  }
  return state;
}

}  // namespace biro
