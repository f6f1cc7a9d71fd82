#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "wbmc/kinematics.hpp"
#include "wbmc/obstacles.hpp"
#include "wbmc/qp.hpp"
#include "wbmc/trajectory.hpp"

namespace wbmc {

/// Velocity-bound shaping thresholds for one joint:
/// g_L < g_H <= G_L < G_H within the position limits.
struct JointLimitShaping {
  double g_L = 0.0;
  double g_H = 0.0;
  double G_L = 0.0;
  double G_H = 0.0;
};

struct ControllerConfig {
  Eigen::VectorXd joint_weights;       // W_q diagonal, one per model joint
  double slack_weight_pos = 0.0;       // W_lambda diagonal, position blocks
  double slack_weight_ori = 0.0;       // W_lambda diagonal, orientation blocks
  double home_weight = 0.0;            // c_h
  Eigen::VectorXd q_home;              // natural configuration
  double home_horizon = 1.0;           // s, horizon for the home-posture velocity
  double omega0 = 0.0;                 // manipulability threshold for damping
  double t_s = 0.01;                   // control period, s
  ControlMode mode = ControlMode::Single;
  ArmSide primary_arm = ArmSide::Left;
  double v_t = 0.1;                    // Cartesian reach speed, m/s
  AvoidanceParams avoidance;
  std::vector<JointLimitShaping> limit_shaping;  // one per model joint
  double qp_tol = 1e-8;
  int qp_max_iter = 200;

  double t_min() const { return 10.0 * t_s; }  // min-jerk horizon floor
  void validate(const RobotModel& model) const;
};

/// Decision-vector layout: controlled joint velocities then slack blocks
/// [lambda_p_pos, lambda_p_ori, lambda_s_pos, lambda_s_ori].
struct ControlLayout {
  DecisionMap map;      // model joint -> decision column (-1 = frozen)
  int n_q = 0;          // controlled joints
  int n_slack = 0;      // 6 single, 12 dual
  int slack_p_pos = 0;  // column offsets of the slack blocks
  int slack_p_ori = 0;
  int slack_s_pos = -1;
  int slack_s_ori = -1;

  static ControlLayout make(const RobotModel& model, ControlMode mode, ArmSide primary);
  int width() const { return n_q + n_slack; }
};

/// Per-arm target as seen by the controller on one tick.
struct ArmTarget {
  Pose pose;
  TargetMode mode = TargetMode::Discrete;
  bool is_new = false;  // starts a fresh reach in discrete mode
};

struct ControlState {
  Eigen::VectorXd q;
  CollisionSet collisions;
  std::optional<Pose> target_left, target_right;
  TargetMode mode_left = TargetMode::Discrete;
  TargetMode mode_right = TargetMode::Discrete;
  std::optional<ReachSampler> reach_left, reach_right;
  std::vector<int> last_active_set;
  long tick = 0;

  std::optional<Pose>& target(ArmSide s) { return s == ArmSide::Left ? target_left : target_right; }
  std::optional<ReachSampler>& reach(ArmSide s) { return s == ArmSide::Left ? reach_left : reach_right; }
  TargetMode& mode(ArmSide s) { return s == ArmSide::Left ? mode_left : mode_right; }
};

struct TickDiagnostics {
  QpStatus status = QpStatus::Optimal;
  bool fallback_used = false;  // primary position slack relaxed
  bool frozen = false;         // both solves infeasible, commanded zero velocity
  bool limit_clamped = false;  // post-integration clamp triggered (should not happen)
  double kkt_residual = 0.0;
  int iterations = 0;
  double mu = 0.0;
  Eigen::VectorXd slack;       // one entry per slack column
  int collision_rows = 0;
};

struct StepResult {
  Eigen::VectorXd qd;  // decision-joint velocities, model indexing (zeros for frozen)
  TickDiagnostics diagnostics;
};

/// Eq-2 style finite-difference spatial velocity between two poses.
std::pair<Eigen::Vector3d, Eigen::Vector3d> desired_spatial_velocity(const Pose& current,
                                                                     const Pose& next,
                                                                     double t_s);

/// (1 - omega/omega0)^2 + 0.01 below the threshold, 0.01 above.
double damping_factor(double omega, double omega0);

/// Piecewise-linear velocity-bound shaping near the position limits.
std::pair<Eigen::VectorXd, Eigen::VectorXd> joint_limit_velocity_bounds(
    const RobotModel& model, const Eigen::VectorXd& q, const ControllerConfig& config);

/// Velocity toward the home posture, clamped to the given bounds.
Eigen::VectorXd home_posture_velocity(const Eigen::VectorXd& q, const Eigen::VectorXd& q_home,
                                      double horizon, const Eigen::VectorXd& qd_lower,
                                      const Eigen::VectorXd& qd_upper);

/// Bimanual relative-position equality rows over the joint velocities.
/// Throws in single mode.
void relative_position_rows(const RobotModel& model, const Eigen::VectorXd& q,
                            const ControlLayout& layout, ArmSide primary,
                            const Eigen::Vector3d& d_rel, double t_s, Eigen::MatrixXd& A,
                            Eigen::VectorXd& b);

/// Everything build_problem needs besides the collision and task rows.
struct ProblemInputs {
  double mu = 0.0;
  Eigen::VectorXd qd_home;  // model indexing
  Eigen::Vector3d nu_p_pos = Eigen::Vector3d::Zero();
  Eigen::Vector3d nu_p_ori = Eigen::Vector3d::Zero();
  Eigen::Vector3d nu_s_pos = Eigen::Vector3d::Zero();
  Eigen::Vector3d nu_s_ori = Eigen::Vector3d::Zero();
  JacobianBlocks jac_primary;
  JacobianBlocks jac_secondary;  // dual mode only
  bool relax_primary_position = false;
};

QpProblem build_problem(const RobotModel& model, const Eigen::VectorXd& q,
                        const ControllerConfig& config, const ControlLayout& layout,
                        const ProblemInputs& in, const Eigen::MatrixXd& A_obstacle,
                        const Eigen::VectorXd& b_obstacle, const Eigen::MatrixXd& A_task_eq,
                        const Eigen::VectorXd& b_task_eq);

class Controller {
 public:
  Controller(const RobotModel& model, ControllerConfig config);

  /// One control tick: drain events, update the collision set, sample next
  /// poses, assemble and solve the QP (with the relaxation fallback), and
  /// integrate the joint positions into `state`.
  StepResult control_step(ControlState& state,
                          const std::optional<ArmTarget>& target_primary,
                          const std::optional<ArmTarget>& target_secondary,
                          std::vector<SensorEvent> events,
                          const std::vector<Eigen::Vector3d>& static_samples,
                          const std::optional<Eigen::Vector3d>& d_rel = std::nullopt);

  ControlState make_state(const Eigen::VectorXd& q0) const;

  const ControlLayout& layout() const { return layout_; }
  const ControllerConfig& config() const { return config_; }
  const RobotModel& model() const { return model_; }

  /// Dump target for per-tick QP problems (debugging); empty disables.
  void set_dump_stream(std::ostream* os) { dump_ = os; }

 private:
  const RobotModel& model_;
  ControllerConfig config_;
  ControlLayout layout_;
  QpSolver solver_;
  std::ostream* dump_ = nullptr;

  std::vector<const BodyPart*> controlled_parts() const;
};

}  // namespace wbmc
