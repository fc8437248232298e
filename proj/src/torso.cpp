#include "biro/torso.hpp"

#include <algorithm>
#include <cmath>

namespace biro {

Eigen::Vector3d roll_pitch_yaw(const Eigen::Quaterniond& q) {
  const Eigen::Matrix3d R = q.normalized().toRotationMatrix();
  const double pitch = std::asin(std::clamp(-R(2, 0), -1.0, 1.0));
  const double roll = std::atan2(R(2, 1), R(2, 2));
  const double yaw = std::atan2(R(1, 0), R(0, 0));
  return {roll, pitch, yaw};
}

Eigen::Quaterniond quaternion_from_rpy(double roll, double pitch, double yaw) {
  return Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) *
                            Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
                            Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()));
}

Eigen::Vector3d rpy_rates(const Eigen::Vector3d& rpy, const Eigen::Vector3d& w) {
  const double sr = std::sin(rpy[0]);
  const double cr = std::cos(rpy[0]);
  const double cp = std::cos(rpy[1]);
  const double tp = std::tan(rpy[1]);
  return {w.x() + (sr * w.y() + cr * w.z()) * tp,
          cr * w.y() - sr * w.z(),
          (sr * w.y() + cr * w.z()) / cp};
}

Eigen::Vector3d to_heading_frame(const Eigen::Vector3d& world, double yaw) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  return {c * world.x() + s * world.y(), -s * world.x() + c * world.y(), world.z()};
}

}  // namespace biro
