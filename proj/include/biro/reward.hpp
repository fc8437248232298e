#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "biro/policy.hpp"
#include "biro/terrain.hpp"
#include "biro/torso.hpp"

namespace biro {

/// Kernel widths for (roll, pitch, height, vx, vy) errors and the weight on
/// per-step heading displacement.
struct RewardWeights {
  std::array<double, 5> widths{5.0, 5.0, 10.0, 8.0, 8.0};
  double displacement = 60.0;

  void validate() const;
};

struct TerminationLimits {
  double max_roll = 0.5;     // rad
  double max_pitch = 0.5;    // rad
  double min_height = 0.35;  // m above terrain
  std::int64_t max_steps = 10000;

  void validate() const;
};

enum class Termination { Running, TorsoLimit, HeightLimit, MaxSteps, Diverged };

std::string to_string(Termination t);

struct StepOutcome {
  double reward = 0.0;
  Termination terminated = Termination::Running;
};

/// exp(-w x^2)
double gaussian_kernel(double width, double x);

/// Sum of the five Gaussian kernels plus displacement * heading_disp. The
/// height kernel is dropped on sloped and sinusoidal ground.
double step_reward(const ObservationVector& obs, double height_error, double heading_disp,
                   const RewardWeights& weights, TerrainKind terrain_kind);

/// Torso clearance above the terrain directly below the torso center.
double torso_clearance(const TorsoState& torso, const Terrain& terrain);

/// First match in order TorsoLimit, HeightLimit, MaxSteps; Running otherwise.
Termination check_termination(const TorsoState& torso, const Terrain& terrain,
                              std::int64_t step_count, const TerminationLimits& limits);

}  // namespace biro
