#include "biro/reward.hpp"

#include <cmath>
#include <stdexcept>

namespace biro {

void RewardWeights::validate() const {
  for (double w : widths) {
    if (!(w > 0.0)) throw std::invalid_argument("reward kernel widths must be > 0");
  }
  if (!std::isfinite(displacement)) throw std::invalid_argument("reward displacement weight must be finite");
}

void TerminationLimits::validate() const {
  if (!(max_roll > 0.0) || !(max_pitch > 0.0) || !(min_height > 0.0) || max_steps <= 0) {
    throw std::invalid_argument("termination limits must be positive");
  }
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Running:
      return "running";
    case Termination::TorsoLimit:
      return "torso_limit";
    case Termination::HeightLimit:
      return "height_limit";
    case Termination::MaxSteps:
      return "max_steps";
    case Termination::Diverged:
      return "diverged";
  }
  return "unknown";
}

double gaussian_kernel(double width, double x) { return std::exp(-width * x * x); }

double step_reward(const ObservationVector& obs, double height_error, double heading_disp,
                   const RewardWeights& weights, TerrainKind terrain_kind) {
  const auto& w = weights.widths;
  double r = gaussian_kernel(w[0], obs[obs::kRoll]) + gaussian_kernel(w[1], obs[obs::kPitch]);
  if (terrain_kind == TerrainKind::Flat) r += gaussian_kernel(w[2], height_error);
  r += gaussian_kernel(w[3], obs[obs::kVelErrX]) + gaussian_kernel(w[4], obs[obs::kVelErrY]);
  return r + weights.displacement * heading_disp;
}

double torso_clearance(const TorsoState& torso, const Terrain& terrain) {
  return torso.position.z() - terrain.height_at(torso.position.x(), torso.position.y());
}

Termination check_termination(const TorsoState& torso, const Terrain& terrain,
                              std::int64_t step_count, const TerminationLimits& limits) {
  const Eigen::Vector3d rpy = roll_pitch_yaw(torso.orientation);
  if (std::abs(rpy[0]) > limits.max_roll || std::abs(rpy[1]) > limits.max_pitch) {
    return Termination::TorsoLimit;
  }
  if (torso_clearance(torso, terrain) < limits.min_height) return Termination::HeightLimit;
  if (step_count >= limits.max_steps) return Termination::MaxSteps;
  return Termination::Running;
}

}  // namespace biro
