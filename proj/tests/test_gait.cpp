#include <doctest.h>

#include <cmath>
#include <numbers>

#include "biro/gait.hpp"

using namespace biro;

TEST_CASE("the right leg runs half a cycle behind the left") {
  CHECK(leg_phase(0.1, LegSide::Left) == 0.1);
  CHECK(leg_phase(0.1, LegSide::Right) == doctest::Approx(0.6));
  CHECK(leg_phase(0.7, LegSide::Right) == doctest::Approx(0.2));
  CHECK(leg_phase_kind(0.1, LegSide::Left) == LegPhase::Swing);
  CHECK(leg_phase_kind(0.1, LegSide::Right) == LegPhase::Stance);
  for (double tau = 0.0; tau < 1.0; tau += 0.01) {
    CHECK(leg_phase_kind(tau, LegSide::Left) != leg_phase_kind(tau, LegSide::Right));
  }
}

TEST_CASE("the policy perspective switches at mid-swing") {
  CHECK(policy_side(0.0) == LegSide::Right);
  CHECK(policy_side(0.24) == LegSide::Right);
  CHECK(policy_side(0.25) == LegSide::Left);
  CHECK(policy_side(0.6) == LegSide::Left);
  CHECK(policy_side(0.75) == LegSide::Right);
}

TEST_CASE("swing traces a semi-ellipse and stance a straight return") {
  GaitConfig cfg;
  const ActionVector a{0.1, 0.01, -0.02, 0.005};
  const FootPosition n = cfg.neutral_foot;
  auto at = [&](double t) { return reference_trajectory(t, a, cfg) - n; };

  // Liftoff behind, touchdown ahead, apex halfway at full clearance.
  CHECK(at(0.0).x() == doctest::Approx(0.01 - 0.05));
  CHECK(at(0.0).z() == doctest::Approx(0.005));
  CHECK(at(0.25).x() == doctest::Approx(0.01));
  CHECK(at(0.25).z() == doctest::Approx(0.005 + cfg.ground_clearance));
  CHECK(at(0.5).x() == doctest::Approx(0.01 + 0.05));
  CHECK(at(0.5).z() == doctest::Approx(0.005));
  CHECK(at(0.75).x() == doctest::Approx(0.01));
  CHECK(at(0.999999).x() == doctest::Approx(0.01 - 0.05).epsilon(1e-5));
  for (double t = 0.0; t < 1.0; t += 0.05) CHECK(at(t).y() == doctest::Approx(-0.02));

  // Every swing point satisfies the ellipse equation.
  for (double t = 0.0; t < 0.5; t += 0.01) {
    const Eigen::Vector3d d = at(t);
    const double u = (d.x() - 0.01) / 0.05;
    const double v = (d.z() - 0.005) / cfg.ground_clearance;
    CHECK(u * u + v * v == doctest::Approx(1.0));
  }
}

TEST_CASE("stance sweeps the foot backward at constant speed") {
  GaitConfig cfg;
  const ActionVector a{0.12, 0.0, 0.0, 0.0};
  const double dx = reference_trajectory(0.6, a, cfg).x() - reference_trajectory(0.55, a, cfg).x();
  const double dx2 = reference_trajectory(0.9, a, cfg).x() - reference_trajectory(0.85, a, cfg).x();
  CHECK(dx < 0.0);
  CHECK(dx == doctest::Approx(dx2));
  CHECK(dx == doctest::Approx(-0.12 * 2.0 * 0.05));
}

TEST_CASE("phase advances by dt over a full cycle and counts half cycles") {
  GaitConfig cfg;
  // Dyadic tick so that the phase sums exactly.
  cfg.step_duration = 0.25;
  cfg.control_rate = 256.0;
  const LegPair<bool> none{false, false};
  PhaseState ph;
  const double dt = cfg.control_dt();
  const int ticks = static_cast<int>(std::lround(2.0 * cfg.step_duration / dt));
  for (int i = 0; i < ticks; ++i) ph = advance_phase(ph, dt, none, cfg);
  CHECK(ph.tau == 0.0);
  CHECK(ph.steps_completed == 2);

  PhaseState big = advance_phase(PhaseState{}, 4.0 * cfg.step_duration + 1e-3, none, cfg);
  CHECK(big.steps_completed == 4);
  CHECK_THROWS_AS(advance_phase(PhaseState{}, 0.0, none, cfg), std::invalid_argument);
}

TEST_CASE("early touchdown in late swing snaps to stance onset") {
  GaitConfig cfg;
  PhaseState ph{0.3, 0};
  const PhaseState next = advance_phase(ph, cfg.control_dt(), {true, false}, cfg);
  CHECK(next.tau == doctest::Approx(0.5));
  CHECK(next.steps_completed == 1);

  // Right leg in late swing at tau 0.85 (local 0.35).
  const PhaseState r = advance_phase({0.84, 3}, cfg.control_dt(), {false, true}, cfg);
  CHECK(r.tau == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.steps_completed == 4);

  // Contact just after liftoff is a scuff and is ignored.
  const PhaseState s = advance_phase({0.05, 0}, cfg.control_dt(), {true, false}, cfg);
  CHECK(s.tau == doctest::Approx(0.05 + cfg.control_dt() / (2.0 * cfg.step_duration)));
  CHECK(s.steps_completed == 0);
}

TEST_CASE("joint targets place both feet on their trajectories") {
  GaitConfig cfg;
  KinematicsConfig kin;
  const ActionVector a{0.1, 0.0, 0.0, 0.0};
  const PhaseState ph{0.2, 0};
  const JointTargets t = joint_targets(ph, a, cfg, kin);
  for (LegSide side : kLegSides) {
    const FootPosition expected =
        mirror_foot_target(reference_trajectory(leg_phase(ph.tau, side), a, cfg), side);
    CHECK((forward_kinematics(t.angles[side], kin.geometry) - expected).norm() < 1e-12);
    CHECK_FALSE(t.clamped[side]);
  }
  CHECK(t.feet.left.y() == doctest::Approx(-t.feet.right.y()));
}

TEST_CASE("out-of-reach targets are clamped rather than rejected") {
  GaitConfig cfg;
  cfg.neutral_foot = {0.0, 0.0, -0.6};
  KinematicsConfig kin;
  const FootTarget ft = foot_target({0.6, 0}, ActionVector{}, LegSide::Left, cfg, kin);
  CHECK(ft.clamped);
  CHECK(ft.position.norm() <= kin.geometry.max_reach() - kin.reach_margin);
  CHECK_NOTHROW(joint_targets({0.6, 0}, ActionVector{}, cfg, kin));
}

TEST_CASE("gait config validation") {
  GaitConfig cfg;
  cfg.step_duration = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = GaitConfig{};
  cfg.neutral_foot.x() = std::nan("");
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
