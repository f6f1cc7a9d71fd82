#include <cmath>

#include <doctest.h>

#include "wbmc/controller.hpp"
#include "wbmc/model_io.hpp"

#include "helpers.hpp"

using namespace wbmc;
using wbmc::test::make_planar_model;

namespace {

ControllerConfig planar_config(const RobotModel& m) {
  ControllerConfig c;
  c.joint_weights = Eigen::VectorXd::Ones(m.n_joints());
  c.slack_weight_pos = 200.0;
  c.slack_weight_ori = 50.0;
  c.home_weight = 0.5;
  c.q_home = m.q_home;
  c.home_horizon = 2.0;
  c.omega0 = 0.02;
  c.t_s = 0.01;
  c.v_t = 0.1;
  c.limit_shaping = default_limit_shaping(m, 0.1, 0.02);
  c.validate(m);
  return c;
}

}  // namespace

TEST_CASE("damping factor") {
  CHECK(damping_factor(0.0, 0.02) == 1.01);
  CHECK(damping_factor(0.02, 0.02) == 0.01);
  CHECK(damping_factor(1.0, 0.02) == 0.01);
  CHECK(damping_factor(0.01, 0.02) == doctest::Approx(0.25 + 0.01).epsilon(1e-12));
  // Continuous at the threshold.
  CHECK(damping_factor(0.02 - 1e-12, 0.02) == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("control layout widths and mapping") {
  const RobotModel m = load_model("models/icub_like.yaml");

  const ControlLayout single = ControlLayout::make(m, ControlMode::Single, ArmSide::Left);
  CHECK(single.n_q == 10);
  CHECK(single.n_slack == 6);
  CHECK(single.width() == 16);
  // Torso first, then the controlled arm; the other arm is frozen.
  for (int i = 0; i < 3; ++i) CHECK(single.map.col_of_joint[i] == i);
  for (int i = 0; i < 7; ++i) {
    CHECK(single.map.col_of_joint[3 + i] == 3 + i);
    CHECK(single.map.col_of_joint[10 + i] == -1);
  }
  CHECK(single.slack_p_pos == 10);
  CHECK(single.slack_p_ori == 13);
  CHECK(single.slack_s_pos == -1);

  const ControlLayout right = ControlLayout::make(m, ControlMode::Single, ArmSide::Right);
  CHECK(right.map.col_of_joint[3] == -1);
  CHECK(right.map.col_of_joint[10] == 3);

  const ControlLayout dual = ControlLayout::make(m, ControlMode::Dual, ArmSide::Right);
  CHECK(dual.n_q == 17);
  CHECK(dual.n_slack == 12);
  CHECK(dual.width() == 29);
  CHECK(dual.slack_s_ori == 17 + 9);
  for (int i = 0; i < 17; ++i) CHECK(dual.map.col_of_joint[i] == i);
}

TEST_CASE("shaped velocity bounds") {
  const RobotModel m = make_planar_model();
  ControllerConfig c = planar_config(m);
  // Joint 1 range [-3, 3]: bands at -3 + {0.12, 0.6} and mirrored.
  Eigen::VectorXd q = Eigen::VectorXd::Zero(7);

  auto [lo, hi] = joint_limit_velocity_bounds(m, q, c);
  CHECK(lo[1] == m.joints[1].qd_min);  // interior: full bounds
  CHECK(hi[1] == m.joints[1].qd_max);

  q[1] = -3.0 + 0.36;  // halfway through the lower fade band
  std::tie(lo, hi) = joint_limit_velocity_bounds(m, q, c);
  CHECK(lo[1] == doctest::Approx(0.5 * m.joints[1].qd_min).epsilon(1e-9));
  CHECK(hi[1] == m.joints[1].qd_max);  // moving away stays free

  q[1] = -3.0 + 0.05;  // inside the outer band: fully pinned downward
  std::tie(lo, hi) = joint_limit_velocity_bounds(m, q, c);
  CHECK(lo[1] == 0.0);
  CHECK(hi[1] == m.joints[1].qd_max);

  q[1] = 3.0 - 0.05;  // mirrored at the upper limit
  std::tie(lo, hi) = joint_limit_velocity_bounds(m, q, c);
  CHECK(hi[1] == 0.0);
  CHECK(lo[1] == m.joints[1].qd_min);
}

TEST_CASE("default limit shaping validates band fractions") {
  const RobotModel m = make_planar_model();
  CHECK_THROWS(default_limit_shaping(m, 0.02, 0.1));  // outer > inner
  CHECK_THROWS(default_limit_shaping(m, 0.7, 0.02));  // inner > half range
  const auto s = default_limit_shaping(m, 0.1, 0.02);
  REQUIRE(int(s.size()) == m.n_joints());
  CHECK(s[0].g_L == doctest::Approx(-3.0 + 0.02 * 6.0));
  CHECK(s[0].g_H == doctest::Approx(-3.0 + 0.1 * 6.0));
  CHECK(s[0].G_L == doctest::Approx(3.0 - 0.1 * 6.0));
  CHECK(s[0].G_H == doctest::Approx(3.0 - 0.02 * 6.0));
}

TEST_CASE("home posture velocity clamps to the bounds") {
  Eigen::VectorXd q(2), q_home(2), lo(2), hi(2);
  q << 0.0, 1.0;
  q_home << 4.0, 0.9;
  lo << -0.5, -0.5;
  hi << 0.5, 0.5;
  const Eigen::VectorXd qd = home_posture_velocity(q, q_home, 2.0, lo, hi);
  CHECK(qd[0] == 0.5);  // (4-0)/2 clamped
  CHECK(qd[1] == doctest::Approx(-0.05));
}

TEST_CASE("desired spatial velocity matches a finite-difference check") {
  const Pose a{Eigen::Vector3d(0.1, 0.2, 0.3), Eigen::Vector3d(0.3, -0.2, 0.5)};
  Pose b = a;
  const double ts = 0.01;
  const Eigen::Vector3d v(0.4, -0.1, 0.2);
  const Eigen::Vector3d w(0.5, 0.3, -0.7);
  b.position += v * ts;
  b.orientation = rotation_to_axis_angle(axis_angle_to_rotation(w * ts) * a.rotation());
  const auto [nu_pos, nu_ori] = desired_spatial_velocity(a, b, ts);
  CHECK((nu_pos - v).norm() < 1e-12);
  CHECK((nu_ori - w).norm() < 1e-9);
  CHECK_THROWS(desired_spatial_velocity(a, b, 0.0));
}

TEST_CASE("build_problem structure in single mode") {
  const RobotModel m = make_planar_model();
  ControllerConfig c = planar_config(m);
  const ControlLayout layout = ControlLayout::make(m, ControlMode::Single, ArmSide::Left);
  const Eigen::VectorXd q = Eigen::VectorXd::Zero(7);

  ProblemInputs in;
  in.mu = 0.3;
  in.qd_home = Eigen::VectorXd::Constant(7, 0.1);
  in.nu_p_pos = Eigen::Vector3d(1.0, 2.0, 3.0);
  in.nu_p_ori = Eigen::Vector3d(0.1, 0.2, 0.3);
  in.jac_primary = jacobian_blocks(m, q, ArmSide::Left, m.ee_frame(ArmSide::Left));

  const Eigen::MatrixXd no_rows(0, layout.width());
  const Eigen::VectorXd no_rhs;
  QpProblem p = build_problem(m, q, c, layout, in, no_rows, no_rhs, no_rows, no_rhs);
  p.validate();

  REQUIRE(p.num_vars() == 10);  // 4 joints + 6 slack
  // H: (mu + c_h) W_q on the joints, slack weights split pos/ori.
  for (int i = 0; i < 4; ++i) {
    CHECK(p.H(i, i) == doctest::Approx(0.8));
    CHECK(p.g[i] == doctest::Approx(-0.5 * 0.1));
  }
  for (int k = 0; k < 3; ++k) {
    CHECK(p.H(4 + k, 4 + k) == 200.0);
    CHECK(p.H(7 + k, 7 + k) == 50.0);
    CHECK(p.g[4 + k] == 0.0);
  }
  // Off-diagonal H is zero.
  CHECK((p.H - Eigen::MatrixXd(p.H.diagonal().asDiagonal())).norm() == 0.0);

  // Equality rows: position block then orientation block, each with -I slack.
  REQUIRE(p.A_eq.rows() == 6);
  const Eigen::MatrixXd J = jacobian(m, q, m.ee_frame(ArmSide::Left));
  for (int j = 0; j < 4; ++j) {
    CHECK((p.A_eq.block<3, 1>(0, j) - J.block<3, 1>(0, j)).norm() < 1e-12);
    CHECK((p.A_eq.block<3, 1>(3, j) - J.block<3, 1>(3, j)).norm() < 1e-12);
  }
  CHECK((p.A_eq.block<3, 3>(0, 4) + Eigen::Matrix3d::Identity()).norm() == 0.0);
  CHECK((p.A_eq.block<3, 3>(3, 7) + Eigen::Matrix3d::Identity()).norm() == 0.0);
  CHECK((p.b_eq.head<3>() - in.nu_p_pos).norm() == 0.0);
  CHECK((p.b_eq.tail<3>() - in.nu_p_ori).norm() == 0.0);

  // Epsilon policy: primary position slack pinned, orientation slack free.
  for (int k = 0; k < 3; ++k) {
    CHECK(p.lb[4 + k] == 0.0);
    CHECK(p.ub[4 + k] == 0.0);
    CHECK(std::isinf(p.lb[7 + k]));
    CHECK(std::isinf(p.ub[7 + k]));
  }
  // Joint bounds come from the shaping (interior here: raw limits).
  CHECK(p.lb[0] == m.joints[0].qd_min);
  CHECK(p.ub[3] == m.joints[3].qd_max);

  // Relaxation frees the position slack.
  in.relax_primary_position = true;
  QpProblem relaxed = build_problem(m, q, c, layout, in, no_rows, no_rhs, no_rows, no_rhs);
  for (int k = 0; k < 3; ++k) {
    CHECK(std::isinf(relaxed.lb[4 + k]));
    CHECK(std::isinf(relaxed.ub[4 + k]));
  }
}

TEST_CASE("build_problem dual mode has four blocks") {
  const RobotModel m = make_planar_model();
  ControllerConfig c = planar_config(m);
  c.mode = ControlMode::Dual;
  const ControlLayout layout = ControlLayout::make(m, ControlMode::Dual, ArmSide::Left);
  const Eigen::VectorXd q = Eigen::VectorXd::Zero(7);

  ProblemInputs in;
  in.mu = 0.01;
  in.qd_home = Eigen::VectorXd::Zero(7);
  in.jac_primary = jacobian_blocks(m, q, ArmSide::Left, m.ee_frame(ArmSide::Left));
  in.jac_secondary = jacobian_blocks(m, q, ArmSide::Right, m.ee_frame(ArmSide::Right));
  in.nu_s_pos = Eigen::Vector3d(0.5, 0.0, 0.0);

  const Eigen::MatrixXd no_rows(0, layout.width());
  const Eigen::VectorXd no_rhs;
  QpProblem p = build_problem(m, q, c, layout, in, no_rows, no_rhs, no_rows, no_rhs);
  p.validate();
  REQUIRE(p.num_vars() == 7 + 12);
  REQUIRE(p.A_eq.rows() == 12);
  // Secondary position block row 6 carries the right-arm Jacobian columns.
  const Eigen::MatrixXd Jr = jacobian(m, q, m.ee_frame(ArmSide::Right));
  for (int i = 0; i < 3; ++i) {
    CHECK((p.A_eq.block<3, 1>(6, layout.map.col_of_joint[4 + i]) -
           Jr.block<3, 1>(0, 4 + i)).norm() < 1e-12);
  }
  CHECK(p.b_eq.segment<3>(6) == Eigen::Vector3d(0.5, 0.0, 0.0));
  // Secondary slack blocks are free; primary position slack pinned.
  CHECK(p.lb[layout.slack_p_pos] == 0.0);
  CHECK(std::isinf(p.lb[layout.slack_s_pos]));
  // Slack weights alternate pos/ori across all four blocks.
  CHECK(p.H(layout.slack_s_pos, layout.slack_s_pos) == 200.0);
  CHECK(p.H(layout.slack_s_ori, layout.slack_s_ori) == 50.0);
}

TEST_CASE("relative position rows") {
  const RobotModel m = make_planar_model();
  const ControlLayout layout = ControlLayout::make(m, ControlMode::Dual, ArmSide::Left);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(7);
  q << 0.1, 0.2, -0.3, 0.4, -0.2, 0.3, 0.1;

  const ControlLayout single = ControlLayout::make(m, ControlMode::Single, ArmSide::Left);
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  CHECK_THROWS(relative_position_rows(m, q, single, ArmSide::Left, Eigen::Vector3d::Zero(), 0.01,
                                      A, b));

  const Eigen::Vector3d d_rel(0.0, 0.25, 0.0);
  relative_position_rows(m, q, layout, ArmSide::Left, d_rel, 0.01, A, b);
  REQUIRE(A.rows() == 3);
  REQUIRE(A.cols() == layout.width());
  // Slack columns untouched.
  CHECK(A.rightCols(12).norm() == 0.0);
  // A qd equals d/dt (x_p - x_s): verify against a small joint step.
  Eigen::VectorXd qd = Eigen::VectorXd::Zero(layout.width());
  for (int i = 0; i < 7; ++i) qd[i] = 0.1 * (i + 1);
  const double h = 1e-7;
  Eigen::VectorXd q2 = q;
  for (int j = 0; j < 7; ++j) q2[j] += h * qd[layout.map.col_of_joint[j]];
  auto rel = [&](const Eigen::VectorXd& qq) {
    return (forward_kinematics(m, qq, m.ee_frame(ArmSide::Left)).translation() -
            forward_kinematics(m, qq, m.ee_frame(ArmSide::Right)).translation())
        .eval();
  };
  const Eigen::Vector3d fd = (rel(q2) - rel(q)) / h;
  CHECK((A * qd - fd).norm() < 1e-5);
  // Offset error enters the right-hand side over one control period.
  const Eigen::Vector3d gap = d_rel - rel(q);
  CHECK((b - gap / 0.01).norm() < 1e-12);
}

TEST_CASE("config validation") {
  const RobotModel m = make_planar_model();
  ControllerConfig good = planar_config(m);
  CHECK_NOTHROW(good.validate(m));

  ControllerConfig c = good;
  c.joint_weights[2] = 0.0;
  CHECK_THROWS(c.validate(m));
  c = good;
  c.slack_weight_ori = -1.0;
  CHECK_THROWS(c.validate(m));
  c = good;
  c.q_home = Eigen::VectorXd::Zero(3);
  CHECK_THROWS(c.validate(m));
  c = good;
  c.limit_shaping[0].g_H = c.limit_shaping[0].G_H + 1.0;
  CHECK_THROWS(c.validate(m));
  CHECK(good.t_min() == doctest::Approx(0.1));
}

TEST_CASE("control step tracks a discrete target") {
  const RobotModel m = make_planar_model();
  ControllerConfig c = planar_config(m);
  Controller ctrl(m, c);
  ControlState st = ctrl.make_state(m.q_home);

  const Pose start = forward_kinematics_pose(m, st.q, m.ee_frame(ArmSide::Left));
  Pose goal = start;
  goal.position += Eigen::Vector3d(-0.05, 0.08, 0.0);  // stay in the plane

  for (int k = 0; k < 1500; ++k) {
    const ArmTarget t{goal, TargetMode::Discrete, k == 0};
    const StepResult r = ctrl.control_step(st, t, std::nullopt, {}, {});
    CHECK(r.diagnostics.status == QpStatus::Optimal);
    CHECK_FALSE(r.diagnostics.frozen);
    CHECK_FALSE(r.diagnostics.limit_clamped);
    // Frozen (right-arm) joints never move.
    for (int j = 4; j < 7; ++j) CHECK(r.qd[j] == 0.0);
  }
  const Pose reached = forward_kinematics_pose(m, st.q, m.ee_frame(ArmSide::Left));
  CHECK((reached.position - goal.position).norm() < 5e-3);
  CHECK(st.tick == 1500);
}

TEST_CASE("streamed target bypasses the reach sampler") {
  const RobotModel m = make_planar_model();
  ControllerConfig c = planar_config(m);
  Controller ctrl(m, c);
  ControlState st = ctrl.make_state(m.q_home);
  Pose goal = forward_kinematics_pose(m, st.q, m.ee_frame(ArmSide::Left));
  goal.position += Eigen::Vector3d(0.0, 0.01, 0.0);
  const ArmTarget t{goal, TargetMode::Streamed, true};
  ctrl.control_step(st, t, std::nullopt, {}, {});
  CHECK_FALSE(st.reach_left.has_value());
  CHECK(st.mode_left == TargetMode::Streamed);
}

TEST_CASE("infeasible demand triggers the slack relaxation fallback") {
  const RobotModel m = make_planar_model();
  ControllerConfig c = planar_config(m);
  Controller ctrl(m, c);
  ControlState st = ctrl.make_state(m.q_home);
  // Streamed target far away: the hard position equality would need joint
  // speeds beyond the box bounds, so the first solve is infeasible and the
  // controller relaxes the primary position slack.
  Pose goal = forward_kinematics_pose(m, st.q, m.ee_frame(ArmSide::Left));
  goal.position += Eigen::Vector3d(0.0, 0.5, 0.0);
  const ArmTarget t{goal, TargetMode::Streamed, true};
  const StepResult r = ctrl.control_step(st, t, std::nullopt, {}, {});
  CHECK(r.diagnostics.fallback_used);
  CHECK_FALSE(r.diagnostics.frozen);
  CHECK(r.diagnostics.status == QpStatus::Optimal);
  CHECK(r.qd.head(4).norm() > 0.1);  // still moves toward the target
}

TEST_CASE("contradictory obstacle rows freeze the tick") {
  const RobotModel m = make_planar_model();
  ControllerConfig c = planar_config(m);
  Controller ctrl(m, c);
  ControlState st = ctrl.make_state(m.q_home);
  // A static sample and a visual keypoint hugging the hand from opposite
  // sides force retreat in both directions at once; no joint velocity
  // satisfies both rows, with or without the slack relaxation.
  const Eigen::Vector3d hand =
      forward_kinematics(m, st.q, FrameRef{3, Eigen::Vector3d(0.0, 0.03, 0.0)}).translation();
  const std::vector<Eigen::Vector3d> pincer = {hand + Eigen::Vector3d(0.0, 0.005, 0.0)};
  std::vector<SensorEvent> events = {VisualKeypoint{hand - Eigen::Vector3d(0.0, 0.005, 0.0)}};
  Pose hold = forward_kinematics_pose(m, st.q, m.ee_frame(ArmSide::Left));
  const ArmTarget t{hold, TargetMode::Discrete, true};
  const StepResult r = ctrl.control_step(st, t, std::nullopt, events, pincer);
  CHECK(r.diagnostics.frozen);
  CHECK(r.diagnostics.fallback_used);
  CHECK(r.qd.norm() == 0.0);
  CHECK((st.q - m.q_home).norm() == 0.0);  // no motion while frozen
  CHECK(r.diagnostics.collision_rows > 0);
}

TEST_CASE("events feed the collision set and decay over time") {
  const RobotModel m = make_planar_model();
  ControllerConfig c = planar_config(m);
  Controller ctrl(m, c);
  ControlState st = ctrl.make_state(m.q_home);
  Pose hold = forward_kinematics_pose(m, st.q, m.ee_frame(ArmSide::Left));

  const Eigen::Vector3d hand =
      forward_kinematics(m, st.q, FrameRef{3, Eigen::Vector3d(0.0, 0.03, 0.0)}).translation();
  std::vector<SensorEvent> events = {VisualKeypoint{hand + Eigen::Vector3d(0, 0.2, 0)}};
  StepResult r = ctrl.control_step(st, ArmTarget{hold, TargetMode::Discrete, true}, std::nullopt,
                                   events, {});
  CHECK(r.diagnostics.collision_rows > 0);
  CHECK(st.collisions.size() > 0);

  // Without re-observation the points expire after the survival window.
  const int ticks = int(c.avoidance.survival_time / c.t_s) + 2;
  for (int k = 0; k < ticks; ++k) {
    r = ctrl.control_step(st, ArmTarget{hold, TargetMode::Discrete, false}, std::nullopt, {}, {});
  }
  CHECK(st.collisions.size() == 0);
  CHECK(r.diagnostics.collision_rows == 0);
}

TEST_CASE("dual mode controls both arms") {
  const RobotModel m = make_planar_model();
  ControllerConfig c = planar_config(m);
  c.mode = ControlMode::Dual;
  c.home_weight = 0.05;  // the secondary slack is soft, so a strong home pull
                         // leaves a visible steady-state offset
  Controller ctrl(m, c);
  ControlState st = ctrl.make_state(m.q_home);

  // Co-directional targets: opposed ones make the two hard position tasks
  // fight over the shared torso, which is a different (stress) regime.
  Pose goal_l = forward_kinematics_pose(m, st.q, m.ee_frame(ArmSide::Left));
  goal_l.position += Eigen::Vector3d(-0.04, 0.02, 0.0);
  Pose goal_r = forward_kinematics_pose(m, st.q, m.ee_frame(ArmSide::Right));
  goal_r.position += Eigen::Vector3d(-0.04, 0.02, 0.0);

  for (int k = 0; k < 1200; ++k) {
    ctrl.control_step(st, ArmTarget{goal_l, TargetMode::Discrete, k == 0},
                      ArmTarget{goal_r, TargetMode::Discrete, k == 0}, {}, {});
  }
  const Pose l = forward_kinematics_pose(m, st.q, m.ee_frame(ArmSide::Left));
  const Pose r = forward_kinematics_pose(m, st.q, m.ee_frame(ArmSide::Right));
  CHECK((l.position - goal_l.position).norm() < 5e-3);
  CHECK((r.position - goal_r.position).norm() < 5e-3);
}
