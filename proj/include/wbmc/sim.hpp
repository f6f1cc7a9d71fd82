#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wbmc/controller.hpp"

namespace wbmc {

inline constexpr int kScenarioFormatVersion = 1;

/// Constant-velocity keypoint obstacle, active on [start, stop].
struct ScriptedObstacle {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // at t = start
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  VisualKeypoint::Kind kind = VisualKeypoint::Kind::Body;
  double start = 0.0;
  double stop = std::numeric_limits<double>::infinity();

  bool active(double t) const { return t >= start && t <= stop; }
  Eigen::Vector3d position_at(double t) const { return position + velocity * (t - start); }
};

/// Streamed circular reference, fixed orientation, in the plane spanned by
/// `axis_u`/`axis_v`. The secondary circle runs the opposite way, phase pi.
struct CircleStream {
  Eigen::Vector3d center_primary = Eigen::Vector3d::Zero();
  Eigen::Vector3d center_secondary = Eigen::Vector3d::Zero();
  Eigen::Vector3d orientation_primary = Eigen::Vector3d::Zero();    // axis-angle
  Eigen::Vector3d orientation_secondary = Eigen::Vector3d::Zero();  // axis-angle
  Eigen::Vector3d axis_u = Eigen::Vector3d::UnitY();
  Eigen::Vector3d axis_v = Eigen::Vector3d::UnitZ();
  double radius = 0.0;
  double period = 0.0;  // s per revolution
  bool counter_rotating = true;

  Pose primary_pose(double t) const;
  Pose secondary_pose(double t) const;
};

struct Scenario {
  std::string name;
  ControlMode mode = ControlMode::Single;
  ArmSide primary_arm = ArmSide::Left;
  double duration = 0.0;        // s; 0 = run until the target sequences end
  double target_timeout = 10.0; // s per discrete target
  std::vector<Pose> targets_primary;
  std::vector<Pose> targets_secondary;
  std::optional<CircleStream> stream;
  std::vector<ScriptedObstacle> obstacles;
  std::vector<Eigen::Vector3d> static_obstacles;
  std::optional<Eigen::Vector3d> relative_position;  // bimanual offset constraint
  std::optional<Eigen::VectorXd> q0;                 // default: model q_home

  void validate() const;
};

Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& scenario, const std::string& path);

/// One CSV row per control tick. Column order is fixed; see docs/formats.md.
struct TickMetrics {
  long tick = 0;
  double time = 0.0;
  int status = 0;  // QpStatus as int
  int fallback = 0;
  int frozen = 0;
  int limit_clamped = 0;
  int iterations = 0;
  double kkt = 0.0;
  double mu = 0.0;
  int collision_rows = 0;
  double qd_norm = 0.0;
  int target_primary = -1;   // active target index, -1 streamed/none
  int target_secondary = -1;
  double err_pos_primary = 0.0;  // vs the commanded reference pose
  double err_ori_primary = 0.0;
  double err_pos_secondary = 0.0;  // nan in single mode
  double err_ori_secondary = 0.0;
  double obstacle_distance = 0.0;  // min scripted/static clearance, inf if none
  double inter_arm_distance = 0.0; // nan in single mode
};

void write_metrics_header(std::ostream& os);
void write_metrics_row(std::ostream& os, const TickMetrics& m);

struct TargetOutcome {
  int index = 0;
  bool reached = false;
  double time_to_reach = 0.0;  // s from activation; timeout value if unreached
  double final_pos_error = 0.0;
  double final_ori_error = 0.0;
};

struct RunResult {
  std::vector<TargetOutcome> targets_primary;
  std::vector<TargetOutcome> targets_secondary;
  long total_ticks = 0;
  long solver_failures = 0;  // ticks with a non-optimal final status
  long fallback_ticks = 0;
  long frozen_ticks = 0;
  double min_obstacle_distance = std::numeric_limits<double>::infinity();
  double min_inter_arm_distance = std::numeric_limits<double>::infinity();
  Eigen::VectorXd q_final;
};

struct RunOptions {
  double reach_pos_tol = 5e-3;  // m
  double reach_ori_tol = 0.1;   // rad
  std::ostream* csv = nullptr;  // per-tick metrics sink, optional
  std::ostream* qp_dump = nullptr;  // per-tick QP problem dump, optional
  long max_ticks = 0;           // 0 = derived from the scenario
};

RunResult run_scenario(const RobotModel& model, const ControllerConfig& config,
                       const Scenario& scenario, const RunOptions& options);

void write_summary(std::ostream& os, const Scenario& scenario, const RunResult& result);

/// Experiment generators. Positions are recentered so that the published
/// workspace grids land around the bundled model's home end-effector pose;
/// the offset is derived from forward kinematics at q_home.
Scenario make_reachability_grid(const RobotModel& model, ArmSide arm, unsigned seed);
Scenario make_pose_pair(const RobotModel& model, ArmSide arm, int repetitions);
Scenario make_circle(const RobotModel& model, ArmSide arm, double duration);
Scenario make_dual_circles(const RobotModel& model, ArmSide primary, double duration);
/// variant 1..3: obstacle approaching along -y, +x, -z.
Scenario make_moving_obstacle(const RobotModel& model, ArmSide arm, int variant);

/// Named generator dispatch: "1", "2", "3", "4", "5-1", "5-2", "5-3".
Scenario make_experiment(const RobotModel& model, const std::string& id, unsigned seed);

}  // namespace wbmc
