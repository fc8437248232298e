#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "biro/gait.hpp"
#include "biro/kinematics.hpp"
#include "biro/policy.hpp"
#include "biro/reward.hpp"
#include "biro/terrain.hpp"
#include "biro/torso.hpp"

namespace biro {

struct BodyParams {
  double mass = 5.5;                                 // kg
  Eigen::Vector3d inertia{0.0586, 0.0226, 0.0130};  // principal, kg m^2
  /// Left hip joint relative to the torso center, body frame. The right hip
  /// is its reflection in y.
  Eigen::Vector3d hip_offset{0.0, 0.165, -0.08};
  double gravity = 9.81;  // m/s^2

  Eigen::Vector3d hip(LegSide side) const { return mirror_foot_target(hip_offset, side); }
  void validate() const;
};

struct ActuatorModel {
  double kp = 40.0;             // N m / rad
  double kd = 1.0;              // N m s / rad
  double torque_limit = 14.0;   // N m
  double speed_limit = 610.0 * 2.0 * 3.14159265358979323846 / 60.0;  // rad/s

  /// Reflected joint inertia that makes the PD loop critically damped,
  /// kd^2 / (4 kp).
  double reflected_inertia() const { return kd * kd / (4.0 * kp); }
  void validate() const;
};

struct ContactConfig {
  double stiffness = 1e4;         // N/m
  double damping = 100.0;         // N s/m
  double slip_threshold = 1e-3;   // m/s, viscous regularization below this slip speed
  double dt = 5e-4;               // s, physics step
  int substeps = 10;              // physics steps per control tick

  void validate() const;
};

struct SimConfig {
  BodyParams body;
  ActuatorModel actuator;
  ContactConfig contact;
  KinematicsConfig kinematics;

  void validate() const;
};

struct SimState {
  TorsoState torso;
  LegPair<JointAngles> joints;
  LegPair<Eigen::Vector3d> joint_velocities{Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};
  LegPair<bool> contact;
  LegPair<Eigen::Vector3d> contact_force{Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};
  double time = 0.0;
  std::int64_t step_count = 0;
};

class NumericalDivergence : public std::runtime_error {
 public:
  explicit NumericalDivergence(const std::string& what) : std::runtime_error(what) {}
};

/// PD law tau = kp (q_d - q) + kd (qd_d - qd), clamped to the torque limit.
Eigen::Vector3d pd_torque(const Eigen::Vector3d& q_target, const Eigen::Vector3d& q,
                          const Eigen::Vector3d& qd_target, const Eigen::Vector3d& qd,
                          const ActuatorModel& act);

struct JointMotion {
  Eigen::Vector3d q;
  Eigen::Vector3d qd;
};

/// One semi-implicit step of the PD loop driving the reflected inertia, with
/// the joint speed saturated at the speed limit.
JointMotion joint_tracking_step(const Eigen::Vector3d& q, const Eigen::Vector3d& qd,
                                const Eigen::Vector3d& q_target, const Eigen::Vector3d& qd_target,
                                const ActuatorModel& act, double dt);

/// Penalty contact at a point foot, explicit form: N = max(0, k d - c v_n)
/// along the normal and regularized Coulomb friction -mu N v / max(|v|, v_reg)
/// against the slip. `normal_velocity` is positive when separating.
Eigen::Vector3d contact_force(double penetration, double normal_velocity,
                              const Eigen::Vector3d& slip_velocity, const Eigen::Vector3d& normal,
                              double friction, const ContactConfig& cfg);

/// A foot touching the ground, as seen by the friction solve.
struct ContactPoint {
  Eigen::Vector3d lever;   // foot minus torso center, world frame
  Eigen::Vector3d normal;  // unit terrain normal
  Eigen::Vector3d slip;    // tangential foot velocity before the step
  double normal_force = 0.0;
};

/// Friction forces for all contacts with the regularized Coulomb law taken
/// implicitly: each force is computed from the slip at the end of the step,
/// with the torso's coupled mobility over all contacts, then limited to the
/// friction cone. Stable for any slope mu N / v_reg.
std::vector<Eigen::Vector3d> solve_friction(const std::vector<ContactPoint>& contacts,
                                            double friction, double mass,
                                            const Eigen::Matrix3d& inv_inertia_world,
                                            const ContactConfig& cfg);

/// Foot point in world coordinates.
Eigen::Vector3d foot_world_position(const SimState& s, LegSide side, const SimConfig& cfg);

/// Kinetic plus gravitational potential energy (zero potential at z = 0).
double mechanical_energy(const TorsoState& torso, const BodyParams& body);

/// A single physics step of length cfg.contact.dt.
SimState physics_step(const SimState& state, const LegPair<JointAngles>& targets,
                      const LegPair<Eigen::Vector3d>& target_rates, const Terrain& terrain,
                      const SimConfig& cfg);

/// One control tick: cfg.contact.substeps physics steps. Throws
/// NumericalDivergence if any state entry becomes non-finite.
SimState step(const SimState& state, const LegPair<JointAngles>& targets,
              const LegPair<Eigen::Vector3d>& target_rates, const Terrain& terrain,
              const SimConfig& cfg);

/// Level torso at (x, y) resting on the terrain with the given joint angles:
/// the lower foot just touches the ground.
SimState standing_state(const LegPair<JointAngles>& joints, const Terrain& terrain,
                        const SimConfig& cfg, double x = 0.0, double y = 0.0);

// ---------------------------------------------------------------------------
// Closed-loop rollout

struct RolloutConfig {
  SimConfig sim;
  GaitConfig gait;
  ActionBounds bounds;
  RewardWeights weights;
  TerminationLimits limits;
  VelocityCommand command{0.15, 0.0};
  /// Std-dev of the initial forward/lateral velocity perturbation (m/s),
  /// drawn from the rollout seed.
  double initial_velocity_noise = 0.0;
  /// The policy sees the mirrored observation except while the left leg is
  /// between mid-swing and mid-stance, so one matrix serves both legs.
  bool mirror_observation = true;
  double divergence_penalty = -1e6;

  /// Torso clearance of the neutral stance, used as the height target.
  double desired_height() const;
  void validate() const;
};

struct TraceRow {
  std::int64_t step;
  double time;
  Eigen::Vector3d rpy;
  Eigen::Vector3d position;
  Eigen::Vector3d velocity;
  ActionVector action;
  LegPair<bool> contact;
  double reward;
};

struct EpisodeStats {
  std::int64_t steps = 0;
  Termination termination = Termination::Running;
  double total_reward = 0.0;
  double distance = 0.0;  // summed heading displacement, m
  double duration = 0.0;  // s
  double mean_abs_roll = 0.0;
  double mean_abs_pitch = 0.0;
  double max_abs_roll = 0.0;
  double max_abs_pitch = 0.0;
  double max_abs_yaw = 0.0;
  std::string diagnostic;  // set when the episode diverged
};

struct RolloutResult {
  double total_reward = 0.0;
  EpisodeStats stats;
  std::vector<TraceRow> trace;
};

RolloutResult rollout(const PolicyMatrix& M, const Terrain& terrain, const RolloutConfig& cfg,
                      std::uint64_t seed, std::int64_t max_steps, bool record_trace = false);

extern const char* const kTraceHeader;
std::string format_trace_csv(const std::vector<TraceRow>& trace);

}  // namespace biro
