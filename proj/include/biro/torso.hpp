#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace biro {

/// Floating-base state of the torso.
struct TorsoState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();          // world, m
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();  // body -> world
  Eigen::Vector3d linear_velocity = Eigen::Vector3d::Zero();   // world, m/s
  Eigen::Vector3d angular_velocity = Eigen::Vector3d::Zero();  // body, rad/s
};

/// Intrinsic Z-Y-X angles, returned as (roll, pitch, yaw).
Eigen::Vector3d roll_pitch_yaw(const Eigen::Quaterniond& q);

/// Builds R = Rz(yaw) Ry(pitch) Rx(roll).
Eigen::Quaterniond quaternion_from_rpy(double roll, double pitch, double yaw);

/// Time derivatives of (roll, pitch, yaw) given the body angular velocity.
Eigen::Vector3d rpy_rates(const Eigen::Vector3d& rpy, const Eigen::Vector3d& body_omega);

/// World vector expressed in the yaw-aligned heading frame.
Eigen::Vector3d to_heading_frame(const Eigen::Vector3d& world, double yaw);

}  // namespace biro
