#include "biro/gait.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace biro {

void GaitConfig::validate() const {
  if (!(step_duration > 0.0)) throw std::invalid_argument("gait.step_duration must be > 0");
  if (!(ground_clearance > 0.0)) throw std::invalid_argument("gait.ground_clearance must be > 0");
  if (!(control_rate > 0.0)) throw std::invalid_argument("gait.control_rate must be > 0");
  if (!neutral_foot.allFinite()) throw std::invalid_argument("gait.neutral_foot must be finite");
}

double leg_phase(double tau, LegSide side) {
  if (side == LegSide::Left) return tau;
  const double t = tau + 0.5;
  return t >= 1.0 ? t - 1.0 : t;
}

LegPhase leg_phase_kind(double tau, LegSide side) {
  return leg_phase(tau, side) < 0.5 ? LegPhase::Swing : LegPhase::Stance;
}

LegSide policy_side(double tau) {
  const double local = leg_phase(tau, kReferenceSide);
  return local >= 0.25 && local < 0.75 ? kReferenceSide : opposite(kReferenceSide);
}

PhaseState advance_phase(const PhaseState& ph, double dt, const LegPair<bool>& contact,
                         const GaitConfig& cfg) {
  if (!(dt > 0.0)) throw std::invalid_argument("advance_phase: dt must be > 0");
  PhaseState out = ph;
  double tau = ph.tau + dt / (2.0 * cfg.step_duration);
  // Count every half-cycle boundary crossed, including several in one call.
  const double halves_before = std::floor(2.0 * ph.tau);
  const double halves_after = std::floor(2.0 * tau);
  out.steps_completed += static_cast<std::int64_t>(halves_after - halves_before);
  tau -= std::floor(tau);

  for (LegSide side : kLegSides) {
    if (!contact[side]) continue;
    const double local = leg_phase(tau, side);
    // Late swing only; contact right after liftoff is a scuff.
    if (local >= 0.25 && local < 0.5) {
      // Stance onset of this leg: local phase 0.5.
      tau = side == LegSide::Left ? 0.5 : 0.0;
      out.steps_completed += 1;
      break;
    }
  }
  out.tau = tau;
  return out;
}

FootPosition reference_trajectory(double tau_leg, const ActionVector& a, const GaitConfig& cfg) {
  const double half = 0.5 * a.step_length;
  Eigen::Vector3d offset;
  if (tau_leg < 0.5) {
    const double s = 2.0 * tau_leg;
    const double theta = std::numbers::pi * s;
    offset = {a.shift_x - half * std::cos(theta), a.shift_y,
              a.shift_z + cfg.ground_clearance * std::sin(theta)};
  } else {
    const double s = 2.0 * tau_leg - 1.0;
    offset = {a.shift_x + half * (1.0 - 2.0 * s), a.shift_y, a.shift_z};
  }
  return cfg.neutral_foot + offset;
}

FootTarget foot_target(const PhaseState& ph, const ActionVector& a, LegSide side,
                       const GaitConfig& cfg, const KinematicsConfig& kin) {
  FootTarget out;
  out.position = mirror_foot_target(reference_trajectory(leg_phase(ph.tau, side), a, cfg), side);
  out.clamped = clamp_to_workspace(out.position, kin.geometry, kin.reach_margin);
  return out;
}

JointTargets joint_targets(const PhaseState& ph, const ActionVector& a, const GaitConfig& cfg,
                           const KinematicsConfig& kin,
                           const std::optional<LegPair<JointAngles>>& previous) {
  return joint_targets(ph, LegPair<ActionVector>{a, a}, cfg, kin, previous);
}

JointTargets joint_targets(const PhaseState& ph, const LegPair<ActionVector>& a,
                           const GaitConfig& cfg, const KinematicsConfig& kin,
                           const std::optional<LegPair<JointAngles>>& previous) {
  JointTargets out;
  for (LegSide side : kLegSides) {
    const FootTarget ft = foot_target(ph, a[side], side, cfg, kin);
    std::optional<double> prev_abd;
    if (previous) prev_abd = (*previous)[side].abduction;
    out.angles[side] = inverse_kinematics(ft.position, kin, side, prev_abd);
    out.feet[side] = ft.position;
    out.clamped[side] = ft.clamped;
  }
  return out;
}

}  // namespace biro
