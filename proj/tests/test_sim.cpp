#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include <doctest.h>

#include "wbmc/model_io.hpp"
#include "wbmc/sim.hpp"

using namespace wbmc;

namespace {

Scenario small_discrete_scenario(const RobotModel& m) {
  Scenario s;
  s.name = "tiny";
  s.mode = ControlMode::Single;
  s.primary_arm = ArmSide::Left;
  s.target_timeout = 2.0;
  Pose t = forward_kinematics_pose(m, m.q_home, m.ee_frame(ArmSide::Left));
  t.position += Eigen::Vector3d(0.0, 0.02, -0.01);
  s.targets_primary.push_back(t);
  return s;
}

}  // namespace

TEST_CASE("scenario yaml round trip") {
  Scenario s;
  s.name = "roundtrip";
  s.mode = ControlMode::Dual;
  s.primary_arm = ArmSide::Right;
  s.duration = 3.5;
  s.target_timeout = 7.0;
  s.targets_primary.push_back({Eigen::Vector3d(0.1, 0.2, 0.3), Eigen::Vector3d(0.0, 0.0, 1.2)});
  s.targets_secondary.push_back({Eigen::Vector3d(-0.1, 0.0, 0.3), Eigen::Vector3d(0.5, 0.0, 0.0)});
  ScriptedObstacle o;
  o.position = Eigen::Vector3d(1.0, 2.0, 3.0);
  o.velocity = Eigen::Vector3d(-0.1, 0.0, 0.0);
  o.kind = VisualKeypoint::Kind::Hand;
  o.start = 0.5;
  o.stop = 2.5;
  s.obstacles.push_back(o);
  s.static_obstacles.push_back(Eigen::Vector3d(0.3, 0.2, 0.1));
  s.relative_position = Eigen::Vector3d(0.0, 0.3, 0.0);
  s.q0 = Eigen::VectorXd::Zero(17);

  const std::string path = "/tmp/wbmc_scenario_roundtrip.yaml";
  save_scenario(s, path);
  const Scenario r = load_scenario(path);
  std::remove(path.c_str());

  CHECK(r.name == s.name);
  CHECK(r.mode == ControlMode::Dual);
  CHECK(r.primary_arm == ArmSide::Right);
  CHECK(r.duration == doctest::Approx(3.5));
  CHECK(r.target_timeout == doctest::Approx(7.0));
  REQUIRE(r.targets_primary.size() == 1);
  CHECK((r.targets_primary[0].position - s.targets_primary[0].position).norm() < 1e-12);
  CHECK((r.targets_primary[0].orientation - s.targets_primary[0].orientation).norm() < 1e-12);
  REQUIRE(r.targets_secondary.size() == 1);
  REQUIRE(r.obstacles.size() == 1);
  CHECK((r.obstacles[0].position - o.position).norm() < 1e-12);
  CHECK((r.obstacles[0].velocity - o.velocity).norm() < 1e-12);
  CHECK(r.obstacles[0].kind == VisualKeypoint::Kind::Hand);
  CHECK(r.obstacles[0].start == doctest::Approx(0.5));
  CHECK(r.obstacles[0].stop == doctest::Approx(2.5));
  REQUIRE(r.static_obstacles.size() == 1);
  REQUIRE(r.relative_position.has_value());
  CHECK((*r.relative_position - *s.relative_position).norm() < 1e-12);
  REQUIRE(r.q0.has_value());
  CHECK(r.q0->size() == 17);
}

TEST_CASE("stream scenario round trip") {
  Scenario s;
  s.name = "stream";
  s.mode = ControlMode::Dual;
  s.duration = 10.0;
  CircleStream cs;
  cs.center_primary = Eigen::Vector3d(0.1, 0.2, 0.3);
  cs.center_secondary = Eigen::Vector3d(0.1, -0.2, 0.3);
  cs.orientation_primary = Eigen::Vector3d(0.0, 0.0, 0.7);
  cs.orientation_secondary = Eigen::Vector3d(0.7, 0.0, 0.0);
  cs.radius = 0.05;
  cs.period = 4.0;
  cs.counter_rotating = true;
  s.stream = cs;

  const std::string path = "/tmp/wbmc_scenario_stream.yaml";
  save_scenario(s, path);
  const Scenario r = load_scenario(path);
  std::remove(path.c_str());
  REQUIRE(r.stream.has_value());
  CHECK((r.stream->center_secondary - cs.center_secondary).norm() < 1e-12);
  CHECK(r.stream->radius == doctest::Approx(0.05));
  CHECK(r.stream->period == doctest::Approx(4.0));
  CHECK(r.stream->counter_rotating);
}

TEST_CASE("scenario validation") {
  Scenario s;
  s.name = "bad";
  CHECK_THROWS(s.validate());  // nothing to do

  s.target_timeout = -1.0;
  CHECK_THROWS(s.validate());
  s.target_timeout = 10.0;

  CircleStream cs;
  cs.radius = 0.05;
  cs.period = 4.0;
  s.stream = cs;
  CHECK_THROWS(s.validate());  // stream without duration
  s.duration = 5.0;
  CHECK_NOTHROW(s.validate());
  s.targets_primary.push_back(Pose{});
  CHECK_THROWS(s.validate());  // stream and discrete targets are exclusive
}

TEST_CASE("circle stream geometry") {
  CircleStream cs;
  cs.center_primary = Eigen::Vector3d(1.0, 0.0, 0.0);
  cs.center_secondary = Eigen::Vector3d(-1.0, 0.0, 0.0);
  cs.axis_u = Eigen::Vector3d::UnitY();
  cs.axis_v = Eigen::Vector3d::UnitZ();
  cs.radius = 0.2;
  cs.period = 8.0;
  cs.orientation_primary = Eigen::Vector3d(0.0, 0.0, 0.3);

  const Pose p0 = cs.primary_pose(0.0);
  CHECK((p0.position - Eigen::Vector3d(1.0, 0.2, 0.0)).norm() < 1e-12);
  CHECK((p0.orientation - cs.orientation_primary).norm() == 0.0);
  const Pose p2 = cs.primary_pose(2.0);  // quarter revolution
  CHECK((p2.position - Eigen::Vector3d(1.0, 0.0, 0.2)).norm() < 1e-12);

  // Counter-rotating secondary: phase pi - phi relative to its own center.
  const Pose s0 = cs.secondary_pose(0.0);
  CHECK((s0.position - Eigen::Vector3d(-1.0, -0.2, 0.0)).norm() < 1e-12);
  const Pose s2 = cs.secondary_pose(2.0);
  CHECK((s2.position - Eigen::Vector3d(-1.0, 0.0, 0.2)).norm() < 1e-12);

  // Co-rotating secondary: phase pi + phi.
  cs.counter_rotating = false;
  const Pose c2 = cs.secondary_pose(2.0);
  CHECK((c2.position - Eigen::Vector3d(-1.0, 0.0, -0.2)).norm() < 1e-12);

  // One full period closes the loop.
  CHECK((cs.primary_pose(8.0).position - p0.position).norm() < 1e-12);
}

TEST_CASE("scripted obstacle window and motion") {
  ScriptedObstacle o;
  o.position = Eigen::Vector3d(0.0, 1.0, 0.0);
  o.velocity = Eigen::Vector3d(0.0, -0.5, 0.0);
  o.start = 1.0;
  o.stop = 3.0;
  CHECK_FALSE(o.active(0.99));
  CHECK(o.active(1.0));
  CHECK(o.active(3.0));
  CHECK_FALSE(o.active(3.01));
  CHECK((o.position_at(1.0) - o.position).norm() == 0.0);
  CHECK((o.position_at(3.0) - Eigen::Vector3d(0.0, 0.0, 0.0)).norm() < 1e-12);
}

TEST_CASE("metrics rows are stable and well formed") {
  std::ostringstream h;
  write_metrics_header(h);
  CHECK(h.str() ==
        "tick,time,status,fallback,frozen,limit_clamped,iterations,kkt,mu,collision_rows,"
        "qd_norm,target_primary,target_secondary,err_pos_primary,err_ori_primary,"
        "err_pos_secondary,err_ori_secondary,obstacle_distance,inter_arm_distance\n");

  TickMetrics m;
  m.tick = 42;
  m.time = 0.42;
  m.status = 0;
  m.iterations = 3;
  m.kkt = 1e-12;
  m.mu = 0.01;
  m.qd_norm = 0.5;
  m.err_pos_secondary = std::nan("");
  m.obstacle_distance = std::numeric_limits<double>::infinity();
  m.inter_arm_distance = std::nan("");
  std::ostringstream a, b;
  write_metrics_row(a, m);
  write_metrics_row(b, m);
  CHECK(a.str() == b.str());
  // 19 columns, non-finite values spelled out.
  int commas = 0;
  for (char ch : a.str()) commas += ch == ',';
  CHECK(commas == 18);
  CHECK(a.str().find("nan") != std::string::npos);
  CHECK(a.str().find("inf") != std::string::npos);
  CHECK(a.str().find("42,") == 0);
}

TEST_CASE("run_scenario reaches a nearby discrete target") {
  const RobotModel m = load_model("models/icub_like.yaml");
  const ControllerConfig c = load_config("configs/default.yaml", m);
  const Scenario s = small_discrete_scenario(m);

  RunOptions opt;
  const RunResult r = run_scenario(m, c, s, opt);
  REQUIRE(r.targets_primary.size() == 1);
  CHECK(r.targets_primary[0].reached);
  CHECK(r.targets_primary[0].time_to_reach < 2.0);
  CHECK(r.targets_primary[0].final_pos_error < opt.reach_pos_tol);
  CHECK(r.targets_primary[0].final_ori_error < opt.reach_ori_tol);
  CHECK(r.solver_failures == 0);
  CHECK(r.frozen_ticks == 0);
  CHECK(r.q_final.size() == m.n_joints());
  // Single mode: no inter-arm tracking.
  CHECK(std::isinf(r.min_inter_arm_distance));
}

TEST_CASE("unreachable target times out") {
  const RobotModel m = load_model("models/icub_like.yaml");
  const ControllerConfig c = load_config("configs/default.yaml", m);
  Scenario s = small_discrete_scenario(m);
  s.targets_primary[0].position += Eigen::Vector3d(0.0, 0.0, 5.0);  // far outside
  s.target_timeout = 1.0;

  const RunResult r = run_scenario(m, c, s, {});
  REQUIRE(r.targets_primary.size() == 1);
  CHECK_FALSE(r.targets_primary[0].reached);
  CHECK(r.targets_primary[0].time_to_reach == doctest::Approx(1.0));
  CHECK(r.targets_primary[0].final_pos_error > 1.0);
}

TEST_CASE("per-tick csv is byte-identical across runs") {
  const RobotModel m = load_model("models/icub_like.yaml");
  const ControllerConfig c = load_config("configs/default.yaml", m);
  Scenario s = small_discrete_scenario(m);
  ScriptedObstacle o;
  o.position = forward_kinematics_pose(m, m.q_home, m.ee_frame(ArmSide::Left)).position +
               Eigen::Vector3d(0.0, 0.3, 0.0);
  o.velocity = Eigen::Vector3d(0.0, -0.05, 0.0);
  s.obstacles.push_back(o);

  std::ostringstream a, b;
  RunOptions opt;
  opt.max_ticks = 120;
  opt.csv = &a;
  run_scenario(m, c, s, opt);
  opt.csv = &b;
  run_scenario(m, c, s, opt);
  CHECK(a.str().size() > 1000);
  CHECK(a.str() == b.str());
}

TEST_CASE("summary names the scenario and the outcomes") {
  const RobotModel m = load_model("models/icub_like.yaml");
  const ControllerConfig c = load_config("configs/default.yaml", m);
  const Scenario s = small_discrete_scenario(m);
  const RunResult r = run_scenario(m, c, s, {});
  std::ostringstream os;
  write_summary(os, s, r);
  CHECK(os.str().find("tiny") != std::string::npos);
  CHECK(os.str().find("1/1") != std::string::npos);
}

TEST_CASE("reachability grid recenters around the home pose") {
  const RobotModel m = load_model("models/icub_like.yaml");
  const Scenario s = make_reachability_grid(m, ArmSide::Left, 7);
  REQUIRE(s.targets_primary.size() == 27);
  CHECK(s.mode == ControlMode::Single);

  const Eigen::Vector3d home =
      forward_kinematics_pose(m, m.q_home, m.ee_frame(ArmSide::Left)).position;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const Pose& t : s.targets_primary) centroid += t.position;
  centroid /= 27.0;
  CHECK((centroid - home).norm() < 1e-9);  // grid is centered on the home ee

  // 3x3x3 grid with 0.04 m spacing in every axis.
  double min_x = 1e9, max_x = -1e9;
  for (const Pose& t : s.targets_primary) {
    min_x = std::min(min_x, t.position.x());
    max_x = std::max(max_x, t.position.x());
  }
  CHECK(max_x - min_x == doctest::Approx(0.08));

  // The seed shuffles the visit order, not the set of targets.
  const Scenario s2 = make_reachability_grid(m, ArmSide::Left, 8);
  double sum1 = 0.0, sum2 = 0.0;
  for (int i = 0; i < 27; ++i) {
    sum1 += s.targets_primary[i].position.sum();
    sum2 += s2.targets_primary[i].position.sum();
  }
  CHECK(sum1 == doctest::Approx(sum2).epsilon(1e-12));
}

TEST_CASE("moving-obstacle generator variants") {
  const RobotModel m = load_model("models/icub_like.yaml");
  for (int v = 1; v <= 3; ++v) {
    const Scenario s = make_moving_obstacle(m, ArmSide::Left, v);
    REQUIRE(s.obstacles.size() == 1);
    const ScriptedObstacle& o = s.obstacles[0];
    CHECK(o.velocity.norm() == doctest::Approx(0.05));
    // The obstacle starts 0.55 m from the held target, flies toward it, and
    // is scripted away before it would reach the target point.
    REQUIRE(s.targets_primary.size() == 1);
    const Eigen::Vector3d to_target = s.targets_primary[0].position - o.position;
    CHECK(to_target.norm() == doctest::Approx(0.55));
    CHECK(to_target.normalized().dot(o.velocity.normalized()) == doctest::Approx(1.0));
    CHECK(o.stop * o.velocity.norm() < to_target.norm());
    s.validate();
  }
  // The three variants approach along different axes.
  const Eigen::Vector3d v1 = make_moving_obstacle(m, ArmSide::Left, 1).obstacles[0].velocity;
  const Eigen::Vector3d v2 = make_moving_obstacle(m, ArmSide::Left, 2).obstacles[0].velocity;
  CHECK(v1.normalized().dot(v2.normalized()) < 0.99);
  CHECK_THROWS(make_moving_obstacle(m, ArmSide::Left, 4));
}

TEST_CASE("experiment dispatch covers all ids") {
  const RobotModel m = load_model("models/icub_like.yaml");
  CHECK(make_experiment(m, "1", 1).targets_primary.size() == 27);
  CHECK(make_experiment(m, "2", 1).targets_primary.size() > 1);
  CHECK(make_experiment(m, "3", 1).stream.has_value());
  CHECK(make_experiment(m, "4", 1).mode == ControlMode::Dual);
  CHECK(make_experiment(m, "5-2", 1).obstacles.size() == 1);
  CHECK_THROWS(make_experiment(m, "9", 1));
}
