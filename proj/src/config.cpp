#include "biro/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace biro {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

/// Reads the keys of one JSON object and rejects anything not read.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) {
    if (!has(key)) throw ConfigError("missing required key '" + join(path_, key) + "'");
    return j_.at(key);
  }

  template <class T>
  void get(const std::string& key, T& out) {
    if (has(key)) out = convert<T>(j_.at(key), join(path_, key));
  }

  template <class T>
  T require(const std::string& key) {
    return convert<T>(at(key), join(path_, key));
  }

  void vec(const std::string& key, Eigen::Ref<Eigen::VectorXd> out) {
    if (!has(key)) return;
    const json& v = j_.at(key);
    const std::string p = join(path_, key);
    if (!v.is_array() || v.size() != static_cast<std::size_t>(out.size())) {
      throw ConfigError(p + " must be an array of " + std::to_string(out.size()) + " numbers");
    }
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = convert<double>(v[i], p);
  }

  std::string child(const std::string& key) const { return join(path_, key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown key '" + join(path_, it.key()) + "'");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  template <class T>
  static T convert(const json& v, const std::string& p) {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(p + " must be a number");
      return v.get<double>();
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(p + " must be true or false");
      return v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(p + " must be an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned()) return v.get<T>();
        if (v.get<std::int64_t>() < 0) throw ConfigError(p + " must be >= 0");
      }
      return v.get<T>();
    } else {
      if (!v.is_string()) throw ConfigError(p + " must be a string");
      return v.get<std::string>();
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

double rad(double deg) { return deg * std::numbers::pi / 180.0; }

Terrain parse_terrain(const json& j, const std::string& path) {
  Section s(j, path);
  const std::string name = s.require<std::string>("name");
  const std::string kind = s.require<std::string>("kind");
  double friction = 0.8;
  s.get("friction", friction);

  Terrain::Shape shape;
  if (kind == "flat") {
    shape = FlatTerrain{};
  } else if (kind == "slope") {
    double angle_deg = 3.0;
    double heading_deg = 0.0;
    s.get("angle_deg", angle_deg);
    s.get("heading_deg", heading_deg);
    shape = SlopeTerrain{rad(angle_deg), rad(heading_deg)};
  } else if (kind == "sinusoidal") {
    SinusoidalTerrain sh;
    s.get("amplitude", sh.amplitude);
    s.get("wavelength", sh.wavelength);
    if (!(sh.amplitude >= 0.0)) throw ConfigError(s.child("amplitude") + " must be >= 0");
    shape = sh;
  } else {
    throw ConfigError(s.child("kind") + " must be one of flat, slope, sinusoidal");
  }
  s.finish();
  try {
    return Terrain(shape, friction, name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace

TerrainSet ExperimentConfig::training_set() const {
  std::vector<Terrain> out;
  for (const auto& name : train_terrains) out.push_back(terrains.by_name(name));
  return TerrainSet(std::move(out));
}

void ExperimentConfig::validate() const {
  try {
    rollout.validate();
    ars.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (terrains.size() == 0) throw ConfigError("terrains must list at least one terrain");
  std::set<std::string> names;
  for (const auto& t : terrains.entries()) {
    if (!names.insert(t.name()).second) throw ConfigError("duplicate terrain name '" + t.name() + "'");
  }
  if (train_terrains.empty()) throw ConfigError("ars.train_terrains must not be empty");
  for (const auto& n : train_terrains) {
    if (!names.count(n)) throw ConfigError("ars.train_terrains names unknown terrain '" + n + "'");
  }
  if (!names.count(eval.terrain)) throw ConfigError("eval.terrain names unknown terrain '" + eval.terrain + "'");
  if (eval.steps < 1) throw ConfigError("eval.steps must be >= 1");
  if (eval.episodes < 1) throw ConfigError("eval.episodes must be >= 1");
  if (!(eval.initial_velocity_noise >= 0.0)) throw ConfigError("eval.initial_velocity_noise must be >= 0");
  if (checkpoint_every < 0) throw ConfigError("ars.checkpoint_every must be >= 0");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  RolloutConfig& r = cfg.rollout;
  Section top(j, "");

  if (top.has("robot")) {
    Section s(j.at("robot"), "robot");
    s.get("mass", r.sim.body.mass);
    s.vec("inertia", r.sim.body.inertia);
    s.vec("hip_offset", r.sim.body.hip_offset);
    s.get("gravity", r.sim.body.gravity);
    s.get("thigh", r.sim.kinematics.geometry.thigh);
    s.get("shank", r.sim.kinematics.geometry.shank);
    s.get("reach_margin", r.sim.kinematics.reach_margin);
    s.finish();
  }
  if (top.has("actuator")) {
    Section s(j.at("actuator"), "actuator");
    s.get("kp", r.sim.actuator.kp);
    s.get("kd", r.sim.actuator.kd);
    s.get("torque_limit", r.sim.actuator.torque_limit);
    s.get("speed_limit", r.sim.actuator.speed_limit);
    s.finish();
  }
  if (top.has("contact")) {
    Section s(j.at("contact"), "contact");
    s.get("stiffness", r.sim.contact.stiffness);
    s.get("damping", r.sim.contact.damping);
    s.get("slip_threshold", r.sim.contact.slip_threshold);
    s.get("dt", r.sim.contact.dt);
    s.get("substeps", r.sim.contact.substeps);
    s.finish();
  }
  if (top.has("gait")) {
    Section s(j.at("gait"), "gait");
    s.get("step_duration", r.gait.step_duration);
    s.get("ground_clearance", r.gait.ground_clearance);
    s.vec("neutral_foot", r.gait.neutral_foot);
    s.get("control_rate", r.gait.control_rate);
    s.get("mirror_observation", r.mirror_observation);
    s.finish();
  }
  if (top.has("action_bounds")) {
    Section s(j.at("action_bounds"), "action_bounds");
    s.vec("lo", r.bounds.lo);
    s.vec("hi", r.bounds.hi);
    s.finish();
  }
  if (top.has("reward")) {
    Section s(j.at("reward"), "reward");
    Eigen::Matrix<double, 5, 1> w = Eigen::Map<const Eigen::Matrix<double, 5, 1>>(r.weights.widths.data());
    s.vec("widths", w);
    for (int i = 0; i < 5; ++i) r.weights.widths[i] = w[i];
    s.get("displacement", r.weights.displacement);
    s.get("divergence_penalty", r.divergence_penalty);
    s.finish();
  }
  if (top.has("termination")) {
    Section s(j.at("termination"), "termination");
    s.get("max_roll", r.limits.max_roll);
    s.get("max_pitch", r.limits.max_pitch);
    s.get("min_height", r.limits.min_height);
    s.finish();
  }
  if (top.has("command")) {
    Section s(j.at("command"), "command");
    s.get("vx", r.command.vx);
    s.get("vy", r.command.vy);
    s.finish();
  }
  top.get("initial_velocity_noise", r.initial_velocity_noise);

  {
    const json& t = top.at("terrains");
    if (!t.is_array() || t.empty()) throw ConfigError("terrains must be a non-empty array");
    std::vector<Terrain> entries;
    for (std::size_t i = 0; i < t.size(); ++i) {
      entries.push_back(parse_terrain(t[i], "terrains[" + std::to_string(i) + "]"));
    }
    cfg.terrains = TerrainSet(std::move(entries));
  }

  {
    Section s(top.at("ars"), "ars");
    s.get("step_size", cfg.ars.step_size);
    s.get("noise", cfg.ars.noise);
    s.get("num_directions", cfg.ars.num_directions);
    s.get("top_directions", cfg.ars.top_directions);
    s.get("episode_length", cfg.ars.episode_length);
    s.get("iterations", cfg.ars.iterations);
    s.get("seed", cfg.ars.seed);
    s.get("reward_std_floor", cfg.ars.reward_std_floor);
    s.get("checkpoint_every", cfg.checkpoint_every);
    if (s.has("train_terrains")) {
      const json& tt = j.at("ars").at("train_terrains");
      if (!tt.is_array()) throw ConfigError("ars.train_terrains must be an array of names");
      for (const auto& n : tt) {
        if (!n.is_string()) throw ConfigError("ars.train_terrains must be an array of names");
        cfg.train_terrains.push_back(n.get<std::string>());
      }
    } else {
      for (const auto& t : cfg.terrains.entries()) cfg.train_terrains.push_back(t.name());
    }
    s.finish();
  }
  r.limits.max_steps = cfg.ars.episode_length;

  if (top.has("eval")) {
    Section s(j.at("eval"), "eval");
    s.get("steps", cfg.eval.steps);
    s.get("episodes", cfg.eval.episodes);
    s.get("terrain", cfg.eval.terrain);
    s.get("initial_velocity_noise", cfg.eval.initial_velocity_noise);
    s.finish();
  } else if (cfg.terrains.size() > 0) {
    cfg.eval.terrain = cfg.terrains.entries().front().name();
  }

  if (top.has("initial_policy") && !j.at("initial_policy").is_null()) {
    std::filesystem::path p = top.require<std::string>("initial_policy");
    cfg.initial_policy = p.is_relative() ? base_dir / p : p;
  }
  cfg.output_dir = top.require<std::string>("output_dir");
  top.finish();

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(j, path.parent_path());
}

}  // namespace biro
