#include "biro/ik_audit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace biro {

FootPosition sample_reachable_target(Rng& rng, const LegGeometry& geom, double margin) {
  const double r_lo = geom.min_reach() + margin;
  const double r_hi = geom.max_reach() - margin;
  while (true) {
    const FootPosition p(rng.uniform(-r_hi, r_hi), rng.uniform(-r_hi, r_hi), rng.uniform(-r_hi, r_hi));
    const double r = p.norm();
    if (r >= r_lo && r <= r_hi && p.z() < -margin) return p;
  }
}

namespace {

double wrap(double a) {
  return std::remainder(a, 2.0 * std::numbers::pi);
}

}  // namespace

namespace {

double residual(const Eigen::Vector3d& q, const FootPosition& p, const LegGeometry& geom) {
  return (forward_kinematics(JointAngles::from_vector(q), geom) - p).squaredNorm();
}

// Levenberg-Marquardt polish kept inside |abduction| <= pi/2, knee >= 0.
Eigen::Vector3d refine(Eigen::Vector3d q, const FootPosition& p, const LegGeometry& geom) {
  const double half_pi = 0.5 * std::numbers::pi;
  double lambda = 1e-6;
  double err = residual(q, p, geom);
  for (int it = 0; it < 200 && err > 1e-30; ++it) {
    const JointAngles qa = JointAngles::from_vector(q);
    const Eigen::Vector3d r = forward_kinematics(qa, geom) - p;
    const Eigen::Matrix3d J = foot_jacobian(qa, geom);
    const Eigen::Matrix3d A = J.transpose() * J + lambda * Eigen::Matrix3d::Identity();
    Eigen::Vector3d cand = q - A.ldlt().solve(J.transpose() * r);
    cand[0] = std::clamp(cand[0], -half_pi, half_pi);
    cand[2] = std::max(cand[2], 0.0);
    const double cand_err = residual(cand, p, geom);
    if (cand_err < err) {
      q = cand;
      err = cand_err;
      lambda = std::max(lambda * 0.1, 1e-15);
    } else {
      lambda *= 10.0;
      if (lambda > 1e6) break;
    }
  }
  return q;
}

// Height of the foot in the leg plane, before abduction.
double plane_height(const Eigen::Vector3d& q, const LegGeometry& geom) {
  return -geom.thigh * std::cos(q[1]) - geom.shank * std::cos(q[1] + q[2]);
}

}  // namespace

JointAngles brute_force_ik(const FootPosition& p, const LegGeometry& geom, int grid) {
  const double pi = std::numbers::pi;
  struct Start {
    double err;
    Eigen::Vector3d q;
  };
  std::vector<Start> starts;
  starts.reserve(static_cast<std::size_t>(2 * grid * grid * grid));
  for (int i = 0; i < grid; ++i) {
    const double a = -0.5 * pi + pi * (i + 0.5) / grid;
    for (int j = 0; j < 2 * grid; ++j) {
      const double h = -pi + pi * (j + 0.5) / grid;
      for (int k = 0; k < grid; ++k) {
        const Eigen::Vector3d q(a, h, pi * (k + 0.5) / grid);
        starts.push_back({residual(q, p, geom), q});
      }
    }
  }
  const std::size_t keep = std::min<std::size_t>(16, starts.size());
  std::partial_sort(starts.begin(), starts.begin() + keep, starts.end(),
                    [](const Start& x, const Start& y) { return x.err < y.err; });

  // Several exact solutions can exist; the convention is the one whose foot
  // hangs below the hip in the leg plane. Fall back to the best fit.
  Eigen::Vector3d best = starts.front().q;
  double best_err = std::numeric_limits<double>::infinity();
  bool best_below = false;
  for (std::size_t n = 0; n < keep; ++n) {
    const Eigen::Vector3d q = refine(starts[n].q, p, geom);
    const double err = residual(q, p, geom);
    const bool below = err < 1e-24 && plane_height(q, geom) < 0.0;
    if ((below && !best_below) || (below == best_below && err < best_err)) {
      best = q;
      best_err = err;
      best_below = below;
    }
  }
  return {wrap(best[0]), wrap(best[1]), best[2]};
}

IkAuditReport ik_audit(int samples, const KinematicsConfig& cfg, std::uint64_t seed) {
  IkAuditReport rep;
  rep.samples = std::max(samples, 0);
  Rng rng(seed);
  for (int n = 0; n < rep.samples; ++n) {
    const FootPosition p = sample_reachable_target(rng, cfg.geometry);
    const IkSolution sol = solve_inverse_kinematics(p, cfg, kReferenceSide);
    if (!sol.ok()) {
      ++rep.failures;
      continue;
    }
    const double rt = (forward_kinematics(sol.angles, cfg.geometry) - p).norm();
    rep.max_round_trip_error = std::max(rep.max_round_trip_error, rt);
    const JointAngles ref = brute_force_ik(p, cfg.geometry);
    const Eigen::Vector3d d = sol.angles.as_vector() - ref.as_vector();
    for (int i = 0; i < 3; ++i) {
      rep.max_oracle_error = std::max(rep.max_oracle_error, std::abs(wrap(d[i])));
    }
  }
  return rep;
}

}  // namespace biro
