#include "biro/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "biro/rng.hpp"

namespace biro {

void BodyParams::validate() const {
  if (!(mass > 0.0)) throw std::invalid_argument("body.mass must be > 0");
  if (!(inertia.minCoeff() > 0.0)) throw std::invalid_argument("body.inertia entries must be > 0");
  if (!hip_offset.allFinite()) throw std::invalid_argument("body.hip_offset must be finite");
  if (!(gravity >= 0.0)) throw std::invalid_argument("body.gravity must be >= 0");
}

void ActuatorModel::validate() const {
  if (!(kp > 0.0) || !(kd > 0.0)) throw std::invalid_argument("actuator.kp and actuator.kd must be > 0");
  if (!(torque_limit > 0.0) || !(speed_limit > 0.0)) {
    throw std::invalid_argument("actuator limits must be positive");
  }
}

void ContactConfig::validate() const {
  if (!(stiffness > 0.0)) throw std::invalid_argument("contact.stiffness must be > 0");
  if (!(damping >= 0.0)) throw std::invalid_argument("contact.damping must be >= 0");
  if (!(slip_threshold > 0.0)) throw std::invalid_argument("contact.slip_threshold must be > 0");
  if (!(dt > 0.0)) throw std::invalid_argument("contact.dt must be > 0");
  if (substeps < 1) throw std::invalid_argument("contact.substeps must be >= 1");
}

void SimConfig::validate() const {
  body.validate();
  actuator.validate();
  contact.validate();
  kinematics.geometry.validate();
  kinematics.limits.validate();
}

Eigen::Vector3d pd_torque(const Eigen::Vector3d& q_target, const Eigen::Vector3d& q,
                          const Eigen::Vector3d& qd_target, const Eigen::Vector3d& qd,
                          const ActuatorModel& act) {
  const Eigen::Vector3d tau = act.kp * (q_target - q) + act.kd * (qd_target - qd);
  return tau.cwiseMax(-act.torque_limit).cwiseMin(act.torque_limit);
}

JointMotion joint_tracking_step(const Eigen::Vector3d& q, const Eigen::Vector3d& qd,
                                const Eigen::Vector3d& q_target, const Eigen::Vector3d& qd_target,
                                const ActuatorModel& act, double dt) {
  const Eigen::Vector3d tau = pd_torque(q_target, q, qd_target, qd, act);
  JointMotion out;
  out.qd = (qd + dt * tau / act.reflected_inertia())
               .cwiseMax(-act.speed_limit)
               .cwiseMin(act.speed_limit);
  out.q = q + dt * out.qd;
  return out;
}

Eigen::Vector3d contact_force(double penetration, double normal_velocity,
                              const Eigen::Vector3d& slip_velocity, const Eigen::Vector3d& normal,
                              double friction, const ContactConfig& cfg) {
  if (penetration <= 0.0) return Eigen::Vector3d::Zero();
  const double n = std::max(0.0, cfg.stiffness * penetration - cfg.damping * normal_velocity);
  if (n == 0.0) return Eigen::Vector3d::Zero();

  const double limit = friction * n;
  const double slip = slip_velocity.norm();
  Eigen::Vector3d tangential = Eigen::Vector3d::Zero();
  if (slip > 0.0) {
    tangential = -limit * slip_velocity / std::max(slip, cfg.slip_threshold);
  }
  return n * normal + tangential;
}

namespace {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

}  // namespace

std::vector<Eigen::Vector3d> solve_friction(const std::vector<ContactPoint>& contacts,
                                            double friction, double mass,
                                            const Eigen::Matrix3d& inv_inertia_world,
                                            const ContactConfig& cfg) {
  const int k = static_cast<int>(contacts.size());
  std::vector<Eigen::Vector3d> out(contacts.size(), Eigen::Vector3d::Zero());
  if (k == 0) return out;

  // Tangent basis per contact.
  std::vector<Eigen::Matrix<double, 3, 2>> basis(contacts.size());
  for (int i = 0; i < k; ++i) {
    const Eigen::Vector3d& n = contacts[i].normal;
    const Eigen::Vector3d a = std::abs(n.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
    const Eigen::Vector3d t1 = (a - a.dot(n) * n).normalized();
    basis[i].col(0) = t1;
    basis[i].col(1) = n.cross(t1);
  }

  // v_end = v + dt W f with f = -g v_end, g = mu N / v_reg per contact.
  const double dt = cfg.dt;
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2 * k, 2 * k);
  Eigen::VectorXd v(2 * k);
  Eigen::VectorXd gain(2 * k);
  for (int i = 0; i < k; ++i) {
    v.segment<2>(2 * i) = basis[i].transpose() * contacts[i].slip;
    gain.segment<2>(2 * i).setConstant(friction * contacts[i].normal_force / cfg.slip_threshold);
  }
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      const Eigen::Matrix3d W = Eigen::Matrix3d::Identity() / mass -
                                skew(contacts[i].lever) * inv_inertia_world * skew(contacts[j].lever);
      A.block<2, 2>(2 * i, 2 * j) += dt * (basis[i].transpose() * W * basis[j]) *
                                     gain.segment<2>(2 * j).asDiagonal();
    }
  }
  const Eigen::VectorXd v_end = A.partialPivLu().solve(v);

  for (int i = 0; i < k; ++i) {
    Eigen::Vector3d f = -basis[i] * gain.segment<2>(2 * i).cwiseProduct(v_end.segment<2>(2 * i));
    const double limit = friction * contacts[i].normal_force;
    const double mag = f.norm();
    if (mag > limit) f *= limit / mag;
    out[i] = f;
  }
  return out;
}

Eigen::Vector3d foot_world_position(const SimState& s, LegSide side, const SimConfig& cfg) {
  const Eigen::Vector3d local =
      cfg.body.hip(side) + forward_kinematics(s.joints[side], cfg.kinematics.geometry);
  return s.torso.position + s.torso.orientation * local;
}

double mechanical_energy(const TorsoState& torso, const BodyParams& body) {
  const Eigen::Vector3d& w = torso.angular_velocity;
  return 0.5 * body.mass * torso.linear_velocity.squaredNorm() +
         0.5 * w.dot(body.inertia.cwiseProduct(w)) + body.mass * body.gravity * torso.position.z();
}

namespace {

void check_finite(const SimState& s) {
  const bool ok = s.torso.position.allFinite() && s.torso.linear_velocity.allFinite() &&
                  s.torso.angular_velocity.allFinite() && s.torso.orientation.coeffs().allFinite() &&
                  s.joint_velocities.left.allFinite() && s.joint_velocities.right.allFinite() &&
                  s.joints.left.as_vector().allFinite() && s.joints.right.as_vector().allFinite();
  if (!ok) {
    std::ostringstream msg;
    msg << "non-finite simulator state at t=" << s.time << " (step " << s.step_count << ")";
    throw NumericalDivergence(msg.str());
  }
}

}  // namespace

SimState physics_step(const SimState& state, const LegPair<JointAngles>& targets,
                      const LegPair<Eigen::Vector3d>& target_rates, const Terrain& terrain,
                      const SimConfig& cfg) {
  const double dt = cfg.contact.dt;
  const BodyParams& body = cfg.body;
  SimState next = state;

  // Joints track their targets first; the feet then follow the new joint state.
  for (LegSide side : kLegSides) {
    const JointMotion m =
        joint_tracking_step(state.joints[side].as_vector(), state.joint_velocities[side],
                            targets[side].as_vector(), target_rates[side], cfg.actuator, dt);
    next.joints[side] = JointAngles::from_vector(m.q);
    next.joint_velocities[side] = m.qd;
  }

  const Eigen::Matrix3d R = state.torso.orientation.toRotationMatrix();
  const Eigen::Vector3d& omega_b = state.torso.angular_velocity;
  const Eigen::Vector3d inv_inertia = body.inertia.cwiseInverse();
  const Eigen::Matrix3d inv_inertia_w = R * inv_inertia.asDiagonal() * R.transpose();

  Eigen::Vector3d force = Eigen::Vector3d(0.0, 0.0, -body.mass * body.gravity);
  Eigen::Vector3d torque_w = Eigen::Vector3d::Zero();

  struct Touch {
    LegSide side;
    Eigen::Matrix3d jacobian;
  };
  std::vector<Touch> touches;
  std::vector<ContactPoint> points;
  for (LegSide side : kLegSides) {
    next.contact[side] = false;
    next.contact_force[side].setZero();

    const JointAngles& q = next.joints[side];
    const Eigen::Vector3d foot_b = body.hip(side) + forward_kinematics(q, cfg.kinematics.geometry);
    const Eigen::Matrix3d J = foot_jacobian(q, cfg.kinematics.geometry);
    const Eigen::Vector3d r_w = R * foot_b;
    const Eigen::Vector3d p_w = state.torso.position + r_w;
    const Eigen::Vector3d v_w = state.torso.linear_velocity +
                                R * (omega_b.cross(foot_b) + J * next.joint_velocities[side]);

    const double ground = terrain.height_at(p_w.x(), p_w.y());
    const Eigen::Vector3d n = terrain.normal_at(p_w.x(), p_w.y());
    const double penetration = (ground - p_w.z()) * n.z();
    if (penetration <= 0.0) continue;

    const double v_n = v_w.dot(n);
    const double normal_force = std::max(0.0, cfg.contact.stiffness * penetration - cfg.contact.damping * v_n);
    if (normal_force == 0.0) continue;
    touches.push_back({side, J});
    points.push_back({r_w, n, v_w - v_n * n, normal_force});
  }

  const std::vector<Eigen::Vector3d> friction =
      solve_friction(points, terrain.friction(), body.mass, inv_inertia_w, cfg.contact);
  for (std::size_t i = 0; i < points.size(); ++i) {
    Eigen::Vector3d f = points[i].normal_force * points[i].normal + friction[i];

    // The leg must be able to transmit the load within the torque limit.
    const Eigen::Vector3d joint_load = touches[i].jacobian.transpose() * (R.transpose() * f);
    const double peak = joint_load.cwiseAbs().maxCoeff();
    if (peak > cfg.actuator.torque_limit) f *= cfg.actuator.torque_limit / peak;

    next.contact[touches[i].side] = true;
    next.contact_force[touches[i].side] = f;
    force += f;
    torque_w += points[i].lever.cross(f);
  }

  // Semi-implicit update: velocities first, positions from the new velocities.
  TorsoState& t = next.torso;
  t.linear_velocity = state.torso.linear_velocity + dt * force / body.mass;
  // Exact position increment for the constant gravity term.
  t.position = state.torso.position + dt * t.linear_velocity +
               Eigen::Vector3d(0.0, 0.0, 0.5 * body.gravity * dt * dt);

  // World angular momentum takes the torque; the body rate is read back
  // through the rotated inertia, which carries the gyroscopic coupling.
  Eigen::Vector3d momentum_w = R * body.inertia.cwiseProduct(omega_b);
  momentum_w += dt * torque_w;
  const Eigen::Vector3d rot = inv_inertia.cwiseProduct(R.transpose() * momentum_w) * dt;
  const double angle = rot.norm();
  if (angle > 0.0) {
    t.orientation = state.torso.orientation * Eigen::Quaterniond(Eigen::AngleAxisd(angle, rot / angle));
  }
  t.orientation.normalize();
  t.angular_velocity = inv_inertia.cwiseProduct(t.orientation.toRotationMatrix().transpose() * momentum_w);

  next.time = state.time + dt;
  return next;
}

SimState step(const SimState& state, const LegPair<JointAngles>& targets,
              const LegPair<Eigen::Vector3d>& target_rates, const Terrain& terrain,
              const SimConfig& cfg) {
  SimState s = state;
  for (int i = 0; i < cfg.contact.substeps; ++i) {
    s = physics_step(s, targets, target_rates, terrain, cfg);
  }
  s.step_count = state.step_count + 1;
  check_finite(s);
  return s;
}

SimState standing_state(const LegPair<JointAngles>& joints, const Terrain& terrain,
                        const SimConfig& cfg, double x, double y) {
  SimState s;
  s.joints = joints;
  s.torso.position = Eigen::Vector3d(x, y, 0.0);
  double z = -std::numeric_limits<double>::infinity();
  for (LegSide side : kLegSides) {
    const Eigen::Vector3d local =
        cfg.body.hip(side) + forward_kinematics(joints[side], cfg.kinematics.geometry);
    z = std::max(z, terrain.height_at(x + local.x(), y + local.y()) - local.z());
  }
  s.torso.position.z() = z;
  return s;
}

// ---------------------------------------------------------------------------

double RolloutConfig::desired_height() const {
  const KinematicsConfig& kin = sim.kinematics;
  const JointAngles q = inverse_kinematics(gait.neutral_foot, kin, kReferenceSide);
  const Eigen::Vector3d foot = sim.body.hip_offset + forward_kinematics(q, kin.geometry);
  return -foot.z();
}

void RolloutConfig::validate() const {
  sim.validate();
  gait.validate();
  bounds.validate();
  weights.validate();
  limits.validate();
  if (!std::isfinite(command.vx) || !std::isfinite(command.vy)) {
    throw std::invalid_argument("command velocity must be finite");
  }
  if (!(initial_velocity_noise >= 0.0)) throw std::invalid_argument("initial_velocity_noise must be >= 0");
  desired_height();
}

RolloutResult rollout(const PolicyMatrix& M, const Terrain& terrain, const RolloutConfig& cfg,
                      std::uint64_t seed, std::int64_t max_steps, bool record_trace) {
  if (max_steps < 1) throw std::invalid_argument("rollout: max_steps must be >= 1");
  TerminationLimits limits = cfg.limits;
  limits.max_steps = max_steps;
  const KinematicsConfig& kin = cfg.sim.kinematics;
  const double control_dt = cfg.gait.control_dt();
  const double desired_height = cfg.desired_height();

  RolloutResult result;
  EpisodeStats& stats = result.stats;

  PhaseState phase;
  ObservationVector s = observe(TorsoState{}, cfg.command);
  ActionVector a = act(M, s, cfg.bounds);
  JointTargets targets = joint_targets(phase, a, cfg.gait, kin);
  SimState state = standing_state(targets.angles, terrain, cfg.sim);
  if (cfg.initial_velocity_noise > 0.0) {
    Rng rng(seed);
    state.torso.linear_velocity.x() = cfg.initial_velocity_noise * rng.normal();
    state.torso.linear_velocity.y() = cfg.initial_velocity_noise * rng.normal();
  }

  LegPair<JointAngles> previous_targets = targets.angles;
  const LegPair<Eigen::Vector3d> zero_rates{Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};
  double sum_roll = 0.0;
  double sum_pitch = 0.0;

  if (record_trace) result.trace.reserve(static_cast<std::size_t>(std::min<std::int64_t>(max_steps, 1 << 20)));

  try {
    while (true) {
      s = observe(state.torso, cfg.command);
      if (cfg.mirror_observation && policy_side(phase.tau) != kReferenceSide) {
        s = mirror_observation(s);
      }
      a = act(M, s, cfg.bounds);
      targets = joint_targets(phase, a, cfg.gait, kin, previous_targets);
      LegPair<Eigen::Vector3d> rates = zero_rates;
      if (state.step_count > 0) {
        for (LegSide side : kLegSides) {
          rates[side] = (targets.angles[side].as_vector() - previous_targets[side].as_vector()) /
                        control_dt;
        }
      }
      previous_targets = targets.angles;

      const Eigen::Vector3d before = state.torso.position;
      const double yaw_before = roll_pitch_yaw(state.torso.orientation)[2];
      state = step(state, targets.angles, rates, terrain, cfg.sim);
      phase = advance_phase(phase, control_dt, state.contact, cfg.gait);

      const Eigen::Vector3d delta = state.torso.position - before;
      const double heading_disp = delta.x() * std::cos(yaw_before) + delta.y() * std::sin(yaw_before);
      const ObservationVector after = observe(state.torso, cfg.command);
      const double height_error = torso_clearance(state.torso, terrain) - desired_height;
      const double r = step_reward(after, height_error, heading_disp, cfg.weights, terrain.kind());

      result.total_reward += r;
      stats.distance += heading_disp;
      stats.steps = state.step_count;
      const double roll = std::abs(after[obs::kRoll]);
      const double pitch = std::abs(after[obs::kPitch]);
      sum_roll += roll;
      sum_pitch += pitch;
      stats.max_abs_roll = std::max(stats.max_abs_roll, roll);
      stats.max_abs_pitch = std::max(stats.max_abs_pitch, pitch);
      stats.max_abs_yaw = std::max(stats.max_abs_yaw, std::abs(after[obs::kYaw]));

      if (record_trace) {
        result.trace.push_back({state.step_count, state.step_count * control_dt,
                                after.head<3>(), state.torso.position, state.torso.linear_velocity,
                                a, state.contact, r});
      }

      const Termination term = check_termination(state.torso, terrain, state.step_count, limits);
      if (term != Termination::Running) {
        stats.termination = term;
        break;
      }
    }
  } catch (const NumericalDivergence& e) {
    stats.termination = Termination::Diverged;
    stats.diagnostic = e.what();
    result.total_reward += cfg.divergence_penalty;
  }

  stats.total_reward = result.total_reward;
  stats.duration = static_cast<double>(stats.steps) * control_dt;
  if (stats.steps > 0) {
    stats.mean_abs_roll = sum_roll / static_cast<double>(stats.steps);
    stats.mean_abs_pitch = sum_pitch / static_cast<double>(stats.steps);
  }
  return result;
}

const char* const kTraceHeader =
    "step,time,roll,pitch,yaw,x,y,z,vx,vy,vz,step_len,shift_x,shift_y,shift_z,contact_l,contact_r,"
    "reward";

std::string format_trace_csv(const std::vector<TraceRow>& trace) {
  std::ostringstream out;
  out.precision(17);
  out << kTraceHeader << '\n';
  for (const TraceRow& r : trace) {
    out << r.step << ',' << r.time << ',' << r.rpy[0] << ',' << r.rpy[1] << ',' << r.rpy[2] << ','
        << r.position.x() << ',' << r.position.y() << ',' << r.position.z() << ','
        << r.velocity.x() << ',' << r.velocity.y() << ',' << r.velocity.z() << ','
        << r.action.step_length << ',' << r.action.shift_x << ',' << r.action.shift_y << ','
        << r.action.shift_z << ',' << int(r.contact.left) << ',' << int(r.contact.right) << ','
        << r.reward << '\n';
  }
  return out.str();
}

}  // namespace biro
