#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace biro {

/// Foot point in a hip frame: x forward, y left, z up (m).
using FootPosition = Eigen::Vector3d;

enum class LegSide { Left, Right };

/// The left leg is the reference side; right-leg targets are reflected in y.
constexpr LegSide kReferenceSide = LegSide::Left;

constexpr LegSide opposite(LegSide s) { return s == LegSide::Left ? LegSide::Right : LegSide::Left; }

struct LegGeometry {
  double thigh = 0.27;  // l1
  double shank = 0.26;  // l2

  double max_reach() const { return thigh + shank; }
  double min_reach() const { return thigh > shank ? thigh - shank : shank - thigh; }
  void validate() const;
};

struct JointAngles {
  double abduction = 0.0;     // about x
  double hip_flexion = 0.0;   // about y, positive swings the foot forward
  double knee_flexion = 0.0;  // about y, relative to the thigh

  Eigen::Vector3d as_vector() const { return {abduction, hip_flexion, knee_flexion}; }
  static JointAngles from_vector(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }
};

struct JointRange {
  double lo;
  double hi;
};

/// Joint limits, stated for the reference (left) leg. The right leg uses the
/// mirrored abduction range.
struct JointLimits {
  JointRange abduction{-1.5707963267948966, 1.5707963267948966};
  JointRange hip_flexion{-3.141592653589793, 3.141592653589793};
  JointRange knee_flexion{0.0, 3.141592653589793};

  bool contains(const JointAngles& q, LegSide side) const;
  void validate() const;
};

struct KinematicsConfig {
  LegGeometry geometry;
  JointLimits limits;
  double reach_margin = 1e-4;  // epsilon kept away from the annulus boundary
};

class UnreachableTarget : public std::runtime_error {
 public:
  explicit UnreachableTarget(const std::string& what) : std::runtime_error(what) {}
};

FootPosition forward_kinematics(const JointAngles& q, const LegGeometry& geom);

/// d(foot)/d(q), columns ordered (abduction, hip, knee).
Eigen::Matrix3d foot_jacobian(const JointAngles& q, const LegGeometry& geom);

enum class IkStatus { Ok, Unreachable, OutsideLimits };

struct IkSolution {
  JointAngles angles;
  IkStatus status = IkStatus::Ok;
  bool singular = false;  // target on the hip x-axis; abduction was carried over

  bool ok() const { return status == IkStatus::Ok; }
};

/// Closed-form IK on the knee-forward branch (knee_flexion >= 0). When the
/// target lies on the hip x-axis the abduction is indeterminate and
/// `previous_abduction` (or 0) is used.
IkSolution solve_inverse_kinematics(const FootPosition& p, const KinematicsConfig& cfg,
                                    LegSide side,
                                    std::optional<double> previous_abduction = std::nullopt);

/// Throwing variant of solve_inverse_kinematics.
JointAngles inverse_kinematics(const FootPosition& p, const KinematicsConfig& cfg, LegSide side,
                               std::optional<double> previous_abduction = std::nullopt);

FootPosition mirror_foot_target(const FootPosition& p, LegSide side);
JointAngles mirror_joint_angles(const JointAngles& q, LegSide side);

/// Radially projects p into the reachable annulus [min+margin, max-margin].
/// Returns true if p was moved.
bool clamp_to_workspace(FootPosition& p, const LegGeometry& geom, double margin);

}  // namespace biro
