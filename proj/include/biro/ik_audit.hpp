#pragma once

#include <cstdint>

#include "biro/kinematics.hpp"
#include "biro/rng.hpp"

namespace biro {

/// Uniform point in the reachable annulus, kept `margin` away from both
/// radii and at least `margin` below the hip so the abduction stays well
/// defined.
FootPosition sample_reachable_target(Rng& rng, const LegGeometry& geom, double margin = 0.01);

/// IK by exhaustive search over a joint grid, the best starts polished with
/// damped Gauss-Newton. Among exact solutions it keeps knee >= 0,
/// |abduction| <= pi/2 and the foot below the hip in the leg plane. Slow;
/// meant for auditing.
JointAngles brute_force_ik(const FootPosition& p, const LegGeometry& geom, int grid = 16);

struct IkAuditReport {
  int samples = 0;
  double max_round_trip_error = 0.0;  // m
  double max_oracle_error = 0.0;      // rad, worst joint over all samples
  int failures = 0;                   // closed form refused a reachable target
};

IkAuditReport ik_audit(int samples, const KinematicsConfig& cfg, std::uint64_t seed);

}  // namespace biro
