#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include "biro/cli.hpp"

using namespace biro;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("biro_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

json minimal_config() {
  return json::parse(R"({
    "terrains": [{"name": "flat", "kind": "flat"}],
    "ars": {"num_directions": 2, "top_directions": 1, "episode_length": 100, "iterations": 1,
            "checkpoint_every": 1},
    "eval": {"steps": 50},
    "output_dir": "run"
  })");
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "config.in.json";
  write(p, j.dump(2));
  return p;
}

std::string config_error(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config errors name the offending key") {
  json j = minimal_config();
  j["robot"] = {{"mas", 5.0}};
  CHECK(config_error(j) == "unknown key 'robot.mas'");

  j = minimal_config();
  j.erase("ars");
  CHECK(config_error(j) == "missing required key 'ars'");

  j = minimal_config();
  j["terrains"][0].erase("kind");
  CHECK(config_error(j) == "missing required key 'terrains[0].kind'");

  j = minimal_config();
  j["robot"] = {{"thigh", 0.0}};
  CHECK_FALSE(config_error(j).empty());

  j = minimal_config();
  j["ars"]["top_directions"] = 3;
  CHECK_FALSE(config_error(j).empty());

  j = minimal_config();
  j["ars"]["train_terrains"] = {"ice"};
  CHECK(config_error(j).find("ice") != std::string::npos);

  CHECK(config_error(minimal_config()).empty());
}

TEST_CASE("config defaults and overrides") {
  json j = minimal_config();
  j["gait"] = {{"step_duration", 0.3}};
  j["initial_policy"] = "p.txt";
  const ExperimentConfig cfg = parse_config(j, "/base");
  CHECK(cfg.rollout.gait.step_duration == 0.3);
  CHECK(cfg.rollout.limits.max_steps == 100);
  CHECK(cfg.train_terrains == std::vector<std::string>{"flat"});
  REQUIRE(cfg.initial_policy);
  CHECK(*cfg.initial_policy == fs::path("/base/p.txt"));
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345.678}) {
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("relative output directories go under the output root") {
  ::unsetenv(kOutputRootEnv);
  CHECK(resolve_output_dir("runs/a") == fs::path("runs/a"));
  ::setenv(kOutputRootEnv, "/tmp/root", 1);
  CHECK(resolve_output_dir("runs/a") == fs::path("/tmp/root/runs/a"));
  CHECK(resolve_output_dir("/abs/a") == fs::path("/abs/a"));
  ::unsetenv(kOutputRootEnv);
}

TEST_CASE("train writes every artifact and is reproducible") {
  TempDir tmp("train");
  const fs::path config = write_config(tmp.path, minimal_config());
  std::ostringstream out, err;

  TrainOptions opt;
  opt.config = config;
  opt.out = tmp.path / "a";
  REQUIRE(cmd_train(opt, out, err) == kExitOk);
  for (const char* f : {"manifest.json", "config.json", "policy_init.txt", "train_log.csv",
                        "policy_final.txt", "policy_best.txt", "checkpoints/policy_iter_000001.txt"}) {
    CHECK_MESSAGE(fs::exists(tmp.path / "a" / f), f);
  }
  const json manifest = json::parse(slurp(tmp.path / "a" / "manifest.json"));
  CHECK(manifest["status"] == "complete");
  CHECK(manifest["seed"] == 1);

  std::istringstream log(slurp(tmp.path / "a" / "train_log.csv"));
  std::string line;
  std::getline(log, line);
  CHECK(line == "iteration,mean_reward,max_reward,std_reward,best_eval");
  std::getline(log, line);
  CHECK(line.rfind("1,", 0) == 0);

  // The snapshot reproduces the run.
  TrainOptions again;
  again.config = tmp.path / "a" / "config.json";
  again.out = tmp.path / "b";
  again.jobs = 2;
  REQUIRE(cmd_train(again, out, err) == kExitOk);
  for (const char* f : {"train_log.csv", "policy_final.txt", "policy_best.txt"}) {
    CHECK(slurp(tmp.path / "a" / f) == slurp(tmp.path / "b" / f));
  }

  // A different seed changes the log.
  TrainOptions other = opt;
  other.out = tmp.path / "c";
  other.seed = 7;
  REQUIRE(cmd_train(other, out, err) == kExitOk);
  CHECK(slurp(tmp.path / "a" / "train_log.csv") != slurp(tmp.path / "c" / "train_log.csv"));
}

TEST_CASE("train rejects bad input with the invalid exit code") {
  TempDir tmp("train_bad");
  std::ostringstream out, err;
  TrainOptions opt;
  opt.config = tmp.path / "missing.json";
  CHECK(cmd_train(opt, out, err) == kExitInvalid);

  json j = minimal_config();
  j["initial_policy"] = "nope.txt";
  opt.config = write_config(tmp.path, j);
  CHECK(cmd_train(opt, out, err) == kExitInvalid);

  // Writing the run into the config's own directory would clobber it.
  j = minimal_config();
  write(tmp.path / "config.json", j.dump());
  opt.config = tmp.path / "config.json";
  opt.out = tmp.path;
  CHECK(cmd_train(opt, out, err) == kExitInvalid);
}

TEST_CASE("eval of the zero policy ends early and writes traces") {
  TempDir tmp("eval");
  json j = minimal_config();
  j["eval"]["steps"] = 2000;
  const fs::path config = write_config(tmp.path, j);
  save_policy(PolicyMatrix{}, tmp.path / "zero.txt");

  std::ostringstream out, err;
  EvalOptions opt;
  opt.policy = tmp.path / "zero.txt";
  opt.config = config;
  opt.out = tmp.path / "eval";
  REQUIRE(cmd_eval(opt, out, err) == kExitOk);
  CHECK(fs::exists(tmp.path / "eval" / "trace_flat_0.csv"));
  std::istringstream summary(slurp(tmp.path / "eval" / "eval_summary.csv"));
  std::string line;
  std::getline(summary, line);
  std::getline(summary, line);
  CHECK(line.find("max_steps") == std::string::npos);

  write(tmp.path / "bad.txt", "2 3\n1 2 3\n4 5 6\n");
  opt.policy = tmp.path / "bad.txt";
  CHECK(cmd_eval(opt, out, err) == kExitInvalid);

  opt.policy = tmp.path / "zero.txt";
  opt.terrain = "ice";
  CHECK(cmd_eval(opt, out, err) == kExitInvalid);
}

TEST_CASE("plot converts radians to degrees") {
  TempDir tmp("plot");
  const std::string row = "0,0.005,0.1,-0.2,0,0,0,0,0,0,0,0,0,0,0,1,1,0\n";
  write(tmp.path / "trace.csv", std::string(kTraceHeader) + "\n" + row);
  std::ostringstream out, err;
  REQUIRE(cmd_plot(tmp.path / "trace.csv", tmp.path / "deg.csv", out, err) == kExitOk);
  std::istringstream csv(slurp(tmp.path / "deg.csv"));
  std::string header, line;
  std::getline(csv, header);
  std::getline(csv, line);
  CHECK(header == "time,roll_deg,pitch_deg,yaw_deg");
  double t = 0, r = 0, p = 0, y = 0;
  char c;
  std::istringstream(line) >> t >> c >> r >> c >> p >> c >> y;
  CHECK(t == 0.005);
  CHECK(r == doctest::Approx(5.729577951308232).epsilon(1e-15));
  CHECK(p == doctest::Approx(-11.459155902616464).epsilon(1e-15));
  CHECK(y == 0.0);
}

TEST_CASE("plot reports malformed input by line and writes nothing") {
  TempDir tmp("plot_bad");
  const std::string good = "0,0.005,0.1,-0.2,0,0,0,0,0,0,0,0,0,0,0,1,1,0\n";
  write(tmp.path / "t.csv", std::string(kTraceHeader) + "\n" + good + "1,0.01,x,0,0\n");
  std::ostringstream out, err;
  CHECK(cmd_plot(tmp.path / "t.csv", tmp.path / "o.csv", out, err) == kExitInvalid);
  CHECK(err.str().find("line 3") != std::string::npos);
  CHECK_FALSE(fs::exists(tmp.path / "o.csv"));

  write(tmp.path / "empty.csv", "");
  CHECK(cmd_plot(tmp.path / "empty.csv", tmp.path / "o.csv", out, err) == kExitInvalid);
  write(tmp.path / "header.csv", std::string(kTraceHeader) + "\n");
  CHECK(cmd_plot(tmp.path / "header.csv", tmp.path / "o.csv", out, err) == kExitInvalid);
  write(tmp.path / "wrong.csv", "a,b\n1,2\n");
  CHECK(cmd_plot(tmp.path / "wrong.csv", tmp.path / "o.csv", out, err) == kExitInvalid);
  CHECK_FALSE(fs::exists(tmp.path / "o.csv"));
}

TEST_CASE("ik-check passes on the default leg and is vacuous with no samples") {
  std::ostringstream out, err;
  IkCheckOptions opt;
  opt.samples = 0;
  CHECK(cmd_ik_check(opt, out, err) == kExitOk);
  CHECK(out.str().find("vacuous") != std::string::npos);

  out.str("");
  opt.samples = 300;
  CHECK(cmd_ik_check(opt, out, err) == kExitOk);
  CHECK(out.str().find("PASS") != std::string::npos);
}
