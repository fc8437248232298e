#include "biro/cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>

#include "biro/ik_audit.hpp"

#ifndef BIRO_VERSION
#define BIRO_VERSION "unknown"
#endif

namespace biro {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path resolve_output_dir(const fs::path& p) {
  if (p.is_absolute()) return p;
  const char* root = std::getenv(kOutputRootEnv);
  if (root && *root) return fs::path(root) / p;
  return p;
}

Objective make_objective(const ExperimentConfig& cfg) {
  const TerrainSet set = cfg.training_set();
  const RolloutConfig rcfg = cfg.rollout;
  const std::int64_t steps = cfg.ars.episode_length;
  return [set, rcfg, steps](const PolicyMatrix& M, std::uint64_t seed) {
    Rng rng(seed);
    const Terrain& terrain = set.sample(rng);
    return rollout(M, terrain, rcfg, derive_seed(seed, 1), steps).total_reward;
  };
}

std::uint64_t eval_episode_seed(std::uint64_t master, int episode) {
  return derive_seed(master, 0x65766131ULL, static_cast<std::uint64_t>(episode));
}

RolloutResult evaluate_episode(const PolicyMatrix& M, const ExperimentConfig& cfg,
                               const Terrain& terrain, std::uint64_t seed, bool record_trace) {
  RolloutConfig rcfg = cfg.rollout;
  rcfg.initial_velocity_noise = cfg.eval.initial_velocity_noise;
  return rollout(M, terrain, rcfg, seed, cfg.eval.steps, record_trace);
}

PolicyMatrix initial_policy(const ExperimentConfig& cfg) {
  if (!cfg.initial_policy) return PolicyMatrix{};
  return load_policy(*cfg.initial_policy);
}

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

bool same_file(const fs::path& a, const fs::path& b) {
  std::error_code ec;
  return fs::exists(a, ec) && fs::exists(b, ec) && fs::equivalent(a, b, ec);
}

std::string checkpoint_name(int iteration) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "policy_iter_%06d.txt", iteration);
  return buf;
}

struct Manifest {
  json doc;
  fs::path path;

  void save() const { write_text(path, doc.dump(2) + "\n"); }
};

}  // namespace

int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  json snapshot;
  try {
    snapshot = read_json(opt.config);
    if (!snapshot.is_object()) throw ConfigError("config must be an object");
    if (opt.seed || opt.iterations) {
      if (!snapshot.contains("ars")) throw ConfigError("missing required key 'ars'");
      if (opt.seed) snapshot["ars"]["seed"] = *opt.seed;
      if (opt.iterations) snapshot["ars"]["iterations"] = *opt.iterations;
    }
    if (opt.out) snapshot["output_dir"] = opt.out->string();
    cfg = parse_config(snapshot, opt.config.parent_path());
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  if (opt.jobs < 1) {
    err << "error: --jobs must be >= 1\n";
    return kExitInvalid;
  }

  PolicyMatrix init;
  try {
    init = initial_policy(cfg);
  } catch (const PolicyFileError& e) {
    err << "error: initial policy: " << e.what() << "\n";
    return kExitInvalid;
  }

  const fs::path dir = resolve_output_dir(cfg.output_dir);
  const fs::path ckpt_dir = dir / "checkpoints";
  try {
    fs::create_directories(ckpt_dir);
    for (const char* name : {"config.json", "manifest.json", "train_log.csv", "policy_init.txt"}) {
      if (same_file(dir / name, opt.config) ||
          (cfg.initial_policy && same_file(dir / name, *cfg.initial_policy))) {
        err << "error: output directory would overwrite input file '" << name << "'\n";
        return kExitInvalid;
      }
    }

    // The snapshot points at the copied initial policy so the run directory
    // reproduces itself.
    if (cfg.initial_policy) snapshot["initial_policy"] = "policy_init.txt";
    snapshot["output_dir"] = cfg.output_dir.string();
    write_text(dir / "config.json", snapshot.dump(2) + "\n");
    save_policy(init, dir / "policy_init.txt");

    std::vector<std::string> files = {"manifest.json", "config.json", "policy_init.txt",
                                      "train_log.csv", "policy_final.txt", "policy_best.txt"};
    if (cfg.checkpoint_every > 0) {
      for (int it = cfg.checkpoint_every; it <= cfg.ars.iterations; it += cfg.checkpoint_every) {
        files.push_back("checkpoints/" + checkpoint_name(it));
      }
    }
    Manifest manifest;
    manifest.path = dir / "manifest.json";
    manifest.doc = {{"version", BIRO_VERSION},
                    {"seed", cfg.ars.seed},
                    {"config", "config.json"},
                    {"jobs", opt.jobs},
                    {"started", utc_now()},
                    {"finished", nullptr},
                    {"status", "running"},
                    {"files", files}};
    manifest.save();

    std::ofstream log(dir / "train_log.csv", std::ios::binary | std::ios::trunc);
    if (!log) throw std::runtime_error("cannot open train_log.csv for writing");
    log << "iteration,mean_reward,max_reward,std_reward,best_eval\n";

    auto on_iteration = [&](const TrainState& st) {
      const IterationStats& s = st.history.back();
      const int done = st.iteration;
      log << done << ',' << format_double(s.mean_reward) << ',' << format_double(s.max_reward) << ','
          << format_double(s.std_reward) << ',' << format_double(s.best_eval) << '\n';
      log.flush();
      if (cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0) {
        save_policy(st.current, ckpt_dir / checkpoint_name(done));
      }
      out << "iteration " << done << "/" << cfg.ars.iterations << "  mean " << s.mean_reward
          << "  max " << s.max_reward << "  eval " << s.eval_reward << "  best " << s.best_eval
          << "\n";
    };

    TrainState state;
    int code = kExitOk;
    try {
      state = train(make_objective(cfg), init, cfg.ars, opt.jobs, on_iteration);
    } catch (const TrainingAborted& e) {
      err << "error: training aborted: " << e.what() << "\n";
      state = e.state();
      code = kExitFailed;
    }
    save_policy(state.current, dir / "policy_final.txt");
    save_policy(state.best, dir / "policy_best.txt");
    manifest.doc["finished"] = utc_now();
    manifest.doc["status"] = code == kExitOk ? "complete" : "aborted";
    manifest.save();
    out << "wrote " << dir.string() << "  best eval " << state.best_eval << "\n";
    return code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailed;
  }
}

int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  PolicyMatrix M;
  try {
    cfg = load_config(opt.config);
    if (opt.terrain) cfg.eval.terrain = *opt.terrain;
    if (opt.episodes) cfg.eval.episodes = *opt.episodes;
    cfg.validate();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  try {
    M = load_policy(opt.policy);
  } catch (const PolicyFileError& e) {
    err << "error: policy '" << opt.policy.string() << "': " << e.what() << "\n";
    return kExitInvalid;
  }

  try {
    const Terrain& terrain = cfg.terrains.by_name(cfg.eval.terrain);
    const fs::path dir = resolve_output_dir(opt.out ? *opt.out : cfg.output_dir / "eval");
    fs::create_directories(dir);
    const std::uint64_t master = opt.seed ? *opt.seed : cfg.ars.seed;

    std::ostringstream summary;
    summary << "episode,terrain,steps,termination,distance,mean_abs_roll,mean_abs_pitch,"
               "max_abs_roll,max_abs_pitch,max_abs_yaw\n";
    int terminated = 0;
    for (int ep = 0; ep < cfg.eval.episodes; ++ep) {
      const RolloutResult res = evaluate_episode(M, cfg, terrain, eval_episode_seed(master, ep), true);
      const EpisodeStats& s = res.stats;
      const std::string trace_name = "trace_" + terrain.name() + "_" + std::to_string(ep) + ".csv";
      write_text(dir / trace_name, format_trace_csv(res.trace));
      summary << ep << ',' << terrain.name() << ',' << s.steps << ',' << to_string(s.termination)
              << ',' << format_double(s.distance) << ',' << format_double(s.mean_abs_roll) << ','
              << format_double(s.mean_abs_pitch) << ',' << format_double(s.max_abs_roll) << ','
              << format_double(s.max_abs_pitch) << ',' << format_double(s.max_abs_yaw) << '\n';
      if (s.termination != Termination::MaxSteps) ++terminated;

      const double to_deg = 180.0 / std::numbers::pi;
      out << "episode " << ep << " on " << terrain.name() << ": " << to_string(s.termination)
          << " after " << s.steps << " steps (" << s.duration << " s), distance " << s.distance
          << " m, mean |roll| " << s.mean_abs_roll * to_deg << " deg, mean |pitch| "
          << s.mean_abs_pitch * to_deg << " deg, max |yaw| " << s.max_abs_yaw * to_deg << " deg\n";
      if (!s.diagnostic.empty()) out << "  diagnostic: " << s.diagnostic << "\n";
    }
    write_text(dir / "eval_summary.csv", summary.str());
    out << terminated << "/" << cfg.eval.episodes << " episodes ended early; traces in "
        << dir.string() << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailed;
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_field(const std::string& s, double& v) {
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  return res.ec == std::errc() && res.ptr == end && std::isfinite(v);
}

}  // namespace

int cmd_plot(const fs::path& trace, const fs::path& output, std::ostream& out, std::ostream& err) {
  std::ifstream in(trace, std::ios::binary);
  if (!in) {
    err << "error: cannot read trace '" << trace.string() << "'\n";
    return kExitInvalid;
  }
  const std::vector<std::string> header = split_csv(kTraceHeader);
  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return header.size();
  };
  const std::size_t c_time = column("time");
  const std::size_t c_roll = column("roll");

  std::string line;
  int number = 0;
  std::vector<std::array<double, 4>> rows;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (number == 1) {
      if (line != kTraceHeader) {
        err << "error: " << trace.string() << ": line 1: unexpected header\n";
        return kExitInvalid;
      }
      continue;
    }
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      err << "error: " << trace.string() << ": line " << number << ": expected " << header.size()
          << " fields, found " << fields.size() << "\n";
      return kExitInvalid;
    }
    std::array<double, 4> row{};
    const std::size_t cols[4] = {c_time, c_roll, c_roll + 1, c_roll + 2};
    for (int k = 0; k < 4; ++k) {
      if (!parse_field(fields[cols[k]], row[k])) {
        err << "error: " << trace.string() << ": line " << number << ": bad number in column '"
            << header[cols[k]] << "'\n";
        return kExitInvalid;
      }
    }
    rows.push_back(row);
  }
  if (number == 0) {
    err << "error: " << trace.string() << ": empty trace\n";
    return kExitInvalid;
  }
  if (rows.empty()) {
    err << "error: " << trace.string() << ": trace has no data rows\n";
    return kExitInvalid;
  }

  const double to_deg = 180.0 / std::numbers::pi;
  std::ostringstream csv;
  csv << "time,roll_deg,pitch_deg,yaw_deg\n";
  for (const auto& r : rows) {
    csv << format_double(r[0]) << ',' << format_double(r[1] * to_deg) << ','
        << format_double(r[2] * to_deg) << ',' << format_double(r[3] * to_deg) << '\n';
  }
  try {
    if (output.has_parent_path()) fs::create_directories(output.parent_path());
    write_text(output, csv.str());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailed;
  }
  out << "wrote " << rows.size() << " rows of roll, pitch and yaw in degrees to " << output.string()
      << "\n";
  return kExitOk;
}

int cmd_ik_check(const IkCheckOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.samples < 0) {
    err << "error: samples must be >= 0\n";
    return kExitInvalid;
  }
  KinematicsConfig kin;
  if (opt.config) {
    try {
      kin = load_config(*opt.config).rollout.sim.kinematics;
    } catch (const ConfigError& e) {
      err << "error: " << e.what() << "\n";
      return kExitInvalid;
    }
  }
  constexpr double kRoundTripTol = 1e-9;
  constexpr double kOracleTol = 1e-6;

  const auto t0 = std::chrono::steady_clock::now();
  const IkAuditReport rep = ik_audit(opt.samples, kin, opt.seed);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  out.precision(3);
  out << "samples " << rep.samples << "\n"
      << "max round-trip error " << std::scientific << rep.max_round_trip_error << " m (limit "
      << kRoundTripTol << ")\n"
      << "max oracle disagreement " << rep.max_oracle_error << " rad (limit " << kOracleTol << ")\n"
      << std::defaultfloat << "unsolved targets " << rep.failures << "\n"
      << "runtime " << secs << " s\n";
  if (rep.samples == 0) {
    out << "PASS (vacuous: no samples)\n";
    return kExitOk;
  }
  const bool ok = rep.failures == 0 && rep.max_round_trip_error < kRoundTripTol &&
                  rep.max_oracle_error < kOracleTol;
  out << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? kExitOk : kExitFailed;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Bipedal walking toolkit: linear policy training and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", BIRO_VERSION);

  TrainOptions train_opt;
  std::uint64_t train_seed = 0;
  int train_iterations = 0;
  std::string train_out;
  auto* train_cmd = app.add_subcommand("train", "Train a policy with random search");
  train_cmd->add_option("--config", train_opt.config, "Experiment config (JSON)")->required();
  auto* train_seed_opt = train_cmd->add_option("--seed", train_seed, "Master seed override");
  auto* train_it_opt = train_cmd->add_option("--iterations", train_iterations, "Iteration override");
  auto* train_out_opt = train_cmd->add_option("--out", train_out, "Run directory override");
  train_cmd->add_option("--jobs", train_opt.jobs, "Parallel rollouts")->check(CLI::PositiveNumber);

  EvalOptions eval_opt;
  std::string eval_terrain;
  int eval_episodes = 0;
  std::uint64_t eval_seed = 0;
  std::string eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "Roll out a policy and export traces");
  eval_cmd->add_option("policy", eval_opt.policy, "Policy file")->required();
  eval_cmd->add_option("--config", eval_opt.config, "Experiment config (JSON)")->required();
  auto* eval_terrain_opt = eval_cmd->add_option("--terrain", eval_terrain, "Terrain name");
  auto* eval_ep_opt = eval_cmd->add_option("--episodes", eval_episodes, "Episode count");
  auto* eval_seed_opt = eval_cmd->add_option("--seed", eval_seed, "Master seed");
  auto* eval_out_opt = eval_cmd->add_option("--out", eval_out, "Trace directory");

  std::string plot_trace;
  std::string plot_output;
  auto* plot_cmd = app.add_subcommand("plot", "Export roll, pitch and yaw in degrees from a trace");
  plot_cmd->add_option("trace", plot_trace, "Trace CSV")->required();
  plot_cmd->add_option("output", plot_output, "Output CSV")->required();

  IkCheckOptions ik_opt;
  std::string ik_config;
  auto* ik_cmd = app.add_subcommand("ik-check", "Audit inverse kinematics against a brute-force solver");
  ik_cmd->add_option("samples", ik_opt.samples, "Random targets")->check(CLI::NonNegativeNumber);
  auto* ik_config_opt = ik_cmd->add_option("--config", ik_config, "Experiment config for the leg geometry");
  ik_cmd->add_option("--seed", ik_opt.seed, "Sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInvalid;
  }

  if (train_cmd->parsed()) {
    if (*train_seed_opt) train_opt.seed = train_seed;
    if (*train_it_opt) train_opt.iterations = train_iterations;
    if (*train_out_opt) train_opt.out = train_out;
    return cmd_train(train_opt, std::cout, std::cerr);
  }
  if (eval_cmd->parsed()) {
    if (*eval_terrain_opt) eval_opt.terrain = eval_terrain;
    if (*eval_ep_opt) eval_opt.episodes = eval_episodes;
    if (*eval_seed_opt) eval_opt.seed = eval_seed;
    if (*eval_out_opt) eval_opt.out = eval_out;
    return cmd_eval(eval_opt, std::cout, std::cerr);
  }
  if (plot_cmd->parsed()) return cmd_plot(plot_trace, plot_output, std::cout, std::cerr);
  if (*ik_config_opt) ik_opt.config = ik_config;
  return cmd_ik_check(ik_opt, std::cout, std::cerr);
}

}  // namespace biro
