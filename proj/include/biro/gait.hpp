#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "biro/kinematics.hpp"

namespace biro {

/// Per-leg container indexed by LegSide.
template <class T>
struct LegPair {
  T left{};
  T right{};

  T& operator[](LegSide s) { return s == LegSide::Left ? left : right; }
  const T& operator[](LegSide s) const { return s == LegSide::Left ? left : right; }
};

constexpr std::array<LegSide, 2> kLegSides{LegSide::Left, LegSide::Right};

struct GaitConfig {
  double step_duration = 0.2;      // s, half a gait cycle
  double ground_clearance = 0.05;  // m, semi-ellipse minor axis
  FootPosition neutral_foot{0.0, -0.155, -0.47};  // reference-side hip frame
  double control_rate = 200.0;     // Hz

  double control_dt() const { return 1.0 / control_rate; }
  void validate() const;
};

/// Gait parameters produced by the policy: step length and foot-placement
/// shifts along x, y, z (m).
struct ActionVector {
  double step_length = 0.0;
  double shift_x = 0.0;
  double shift_y = 0.0;
  double shift_z = 0.0;

  static constexpr int kSize = 4;
  Eigen::Vector4d as_vector() const { return {step_length, shift_x, shift_y, shift_z}; }
  static ActionVector from_vector(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }
};

struct PhaseState {
  double tau = 0.0;  // [0, 1)
  std::int64_t steps_completed = 0;
};

enum class LegPhase { Swing, Stance };

/// Leg-local phase: the right leg runs half a cycle behind the left.
double leg_phase(double tau, LegSide side);
LegPhase leg_phase_kind(double tau, LegSide side);

/// The leg whose perspective the policy takes: the one in the second half of
/// its swing or the first half of its stance. The switch falls at mid-swing,
/// when only the other foot carries load and it sits under the hip.
LegSide policy_side(double tau);

/// Advances tau by dt / (2 step_duration) modulo 1. A leg reporting contact
/// in the second half of its swing snaps tau forward to that leg's stance
/// onset. Each half-cycle boundary (natural or snapped) counts one step.
PhaseState advance_phase(const PhaseState& ph, double dt, const LegPair<bool>& contact,
                         const GaitConfig& cfg);

struct FootTarget {
  FootPosition position;
  bool clamped = false;  // raw point left the reachable annulus and was projected
};

/// Unclamped trajectory point in the reference-side frame at leg phase
/// `tau_leg`: cosine semi-ellipse during swing, straight return in stance.
FootPosition reference_trajectory(double tau_leg, const ActionVector& a, const GaitConfig& cfg);

FootTarget foot_target(const PhaseState& ph, const ActionVector& a, LegSide side,
                       const GaitConfig& cfg, const KinematicsConfig& kin);

struct JointTargets {
  LegPair<JointAngles> angles;
  LegPair<FootPosition> feet;
  LegPair<bool> clamped;
};

/// IK of both legs' foot targets. Throws UnreachableTarget if a clamped
/// target still violates joint limits.
JointTargets joint_targets(const PhaseState& ph, const ActionVector& a, const GaitConfig& cfg,
                           const KinematicsConfig& kin,
                           const std::optional<LegPair<JointAngles>>& previous = std::nullopt);

/// Same, with separate gait parameters per leg.
JointTargets joint_targets(const PhaseState& ph, const LegPair<ActionVector>& a,
                           const GaitConfig& cfg, const KinematicsConfig& kin,
                           const std::optional<LegPair<JointAngles>>& previous = std::nullopt);

}  // namespace biro
