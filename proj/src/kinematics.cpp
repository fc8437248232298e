#include "biro/kinematics.hpp"

#include <algorithm>
#include <cmath>

namespace biro {

void LegGeometry::validate() const {
  if (!(thigh > 0.0) || !std::isfinite(thigh)) throw std::invalid_argument("thigh length must be > 0");
  if (!(shank > 0.0) || !std::isfinite(shank)) throw std::invalid_argument("shank length must be > 0");
}

static bool in_range(double v, const JointRange& r) { return v >= r.lo && v <= r.hi; }

bool JointLimits::contains(const JointAngles& q, LegSide side) const {
  JointRange abd = abduction;
  if (side != kReferenceSide) abd = {-abduction.hi, -abduction.lo};
  return in_range(q.abduction, abd) && in_range(q.hip_flexion, hip_flexion) &&
         in_range(q.knee_flexion, knee_flexion);
}

void JointLimits::validate() const {
  for (const JointRange* r : {&abduction, &hip_flexion, &knee_flexion}) {
    if (!(r->lo < r->hi)) throw std::invalid_argument("joint limit lo must be < hi");
  }
}

FootPosition forward_kinematics(const JointAngles& q, const LegGeometry& geom) {
  const double hk = q.hip_flexion + q.knee_flexion;
  const double sx = geom.thigh * std::sin(q.hip_flexion) + geom.shank * std::sin(hk);
  const double sz = -geom.thigh * std::cos(q.hip_flexion) - geom.shank * std::cos(hk);
  const double ca = std::cos(q.abduction);
  const double sa = std::sin(q.abduction);
  return {sx, -sa * sz, ca * sz};
}

Eigen::Matrix3d foot_jacobian(const JointAngles& q, const LegGeometry& geom) {
  const double h = q.hip_flexion;
  const double hk = h + q.knee_flexion;
  const double sz = -geom.thigh * std::cos(h) - geom.shank * std::cos(hk);
  const double ca = std::cos(q.abduction);
  const double sa = std::sin(q.abduction);

  const double dsx_dh = geom.thigh * std::cos(h) + geom.shank * std::cos(hk);
  const double dsz_dh = geom.thigh * std::sin(h) + geom.shank * std::sin(hk);
  const double dsx_dk = geom.shank * std::cos(hk);
  const double dsz_dk = geom.shank * std::sin(hk);

  Eigen::Matrix3d J;
  J << 0.0, dsx_dh, dsx_dk,
       -ca * sz, -sa * dsz_dh, -sa * dsz_dk,
       -sa * sz, ca * dsz_dh, ca * dsz_dk;
  return J;
}

IkSolution solve_inverse_kinematics(const FootPosition& p, const KinematicsConfig& cfg,
                                    LegSide side, std::optional<double> previous_abduction) {
  const LegGeometry& g = cfg.geometry;
  IkSolution out;

  const double reach = p.norm();
  if (!p.allFinite() || reach < g.min_reach() + cfg.reach_margin ||
      reach > g.max_reach() - cfg.reach_margin) {
    out.status = IkStatus::Unreachable;
    return out;
  }

  // Undo abduction: the leg plane contains the x-axis and the target.
  const double radial = std::hypot(p.y(), p.z());
  double abduction;
  if (radial < 1e-12) {
    out.singular = true;
    abduction = previous_abduction.value_or(0.0);
  } else {
    abduction = std::atan2(p.y(), -p.z());
  }
  const double sagittal_x = p.x();
  const double sagittal_z = -radial;

  const double d2 = sagittal_x * sagittal_x + sagittal_z * sagittal_z;
  const double l1 = g.thigh;
  const double l2 = g.shank;
  const double cos_knee = std::clamp((d2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0);
  const double knee = std::acos(cos_knee);

  // Foot direction measured from straight down, positive forward.
  const double foot_angle = std::atan2(sagittal_x, -sagittal_z);
  const double hip = foot_angle - std::atan2(l2 * std::sin(knee), l1 + l2 * std::cos(knee));

  out.angles = {abduction, hip, knee};
  if (!cfg.limits.contains(out.angles, side)) out.status = IkStatus::OutsideLimits;
  return out;
}

JointAngles inverse_kinematics(const FootPosition& p, const KinematicsConfig& cfg, LegSide side,
                               std::optional<double> previous_abduction) {
  const IkSolution sol = solve_inverse_kinematics(p, cfg, side, previous_abduction);
  switch (sol.status) {
    case IkStatus::Ok:
      return sol.angles;
    case IkStatus::Unreachable:
      throw UnreachableTarget("foot target outside the reachable annulus (|p| = " +
                              std::to_string(p.norm()) + " m)");
    case IkStatus::OutsideLimits:
      throw UnreachableTarget("foot target requires joint angles outside the configured limits");
  }
  return sol.angles;
}

FootPosition mirror_foot_target(const FootPosition& p, LegSide side) {
  if (side == kReferenceSide) return p;
  return {p.x(), -p.y(), p.z()};
}

JointAngles mirror_joint_angles(const JointAngles& q, LegSide side) {
  if (side == kReferenceSide) return q;
  return {-q.abduction, q.hip_flexion, q.knee_flexion};
}

bool clamp_to_workspace(FootPosition& p, const LegGeometry& geom, double margin) {
  // Land strictly inside so the IK reach test passes after rounding.
  const double lo = geom.min_reach() + margin + 1e-9;
  const double hi = geom.max_reach() - margin - 1e-9;
  const double n = p.norm();
  if (n >= lo && n <= hi) return false;
  if (n < 1e-12) {
    p = FootPosition(0.0, 0.0, -lo);
    return true;
  }
  p *= std::clamp(n, lo, hi) / n;
  return true;
}

}  // namespace biro
