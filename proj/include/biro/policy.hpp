#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "biro/gait.hpp"
#include "biro/torso.hpp"

namespace biro {

constexpr int kObservationSize = 11;
constexpr int kActionSize = ActionVector::kSize;

/// (roll, pitch, yaw, roll_rate, pitch_rate, yaw_rate, e_vx, e_vy, e_vz,
///  cmd_vx, cmd_vy)
using ObservationVector = Eigen::Matrix<double, kObservationSize, 1>;
using PolicyEntries = Eigen::Matrix<double, kActionSize, kObservationSize>;
using PolicyMask = Eigen::Matrix<double, kActionSize, kObservationSize>;

namespace obs {
enum Index : int {
  kRoll = 0,
  kPitch,
  kYaw,
  kRollRate,
  kPitchRate,
  kYawRate,
  kVelErrX,
  kVelErrY,
  kVelErrZ,
  kCmdVx,
  kCmdVy,
};
}  // namespace obs

struct VelocityCommand {
  double vx = 0.0;
  double vy = 0.0;
};

/// Linear policy a = M s with an optional 0/1 mask of trainable entries.
struct PolicyMatrix {
  PolicyEntries entries = PolicyEntries::Zero();
  PolicyMask mask = PolicyMask::Ones();

  bool operator==(const PolicyMatrix& o) const {
    return entries == o.entries && mask == o.mask;
  }
};

struct ActionBounds {
  Eigen::Vector4d lo{0.0, -0.05, -0.05, -0.05};
  Eigen::Vector4d hi{0.15, 0.05, 0.05, 0.05};

  void validate() const;
};

ObservationVector observe(const TorsoState& torso, const VelocityCommand& command);

/// The observation as seen from the mirrored (right-leg) side: lateral and
/// yaw quantities change sign.
ObservationVector mirror_observation(const ObservationVector& s);

/// Unclamped M s.
Eigen::Vector4d policy_output(const PolicyMatrix& M, const ObservationVector& s);
ActionVector act(const PolicyMatrix& M, const ObservationVector& s, const ActionBounds& bounds);

class PolicyFileError : public std::runtime_error {
 public:
  explicit PolicyFileError(const std::string& what) : std::runtime_error(what) {}
};

/// Text format: "4 11", four rows of 11 shortest round-trip decimals, then
/// optionally four mask rows of 0/1.
std::string format_policy(const PolicyMatrix& M);
PolicyMatrix parse_policy(const std::string& text);

void save_policy(const PolicyMatrix& M, const std::filesystem::path& path);
PolicyMatrix load_policy(const std::filesystem::path& path);

}  // namespace biro
