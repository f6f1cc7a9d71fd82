#include "wbmc/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace wbmc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void ControllerConfig::validate(const RobotModel& model) const {
  const int n = model.n_joints();
  if (joint_weights.size() != n) throw std::invalid_argument("config: joint_weights size mismatch");
  if (joint_weights.minCoeff() <= 0.0) throw std::invalid_argument("config: joint weights must be > 0");
  if (slack_weight_pos <= 0.0 || slack_weight_ori <= 0.0) {
    throw std::invalid_argument("config: slack weights must be > 0");
  }
  if (home_weight < 0.0) throw std::invalid_argument("config: home weight must be >= 0");
  if (q_home.size() != n) throw std::invalid_argument("config: q_home size mismatch");
  if (omega0 <= 0.0) throw std::invalid_argument("config: omega0 must be > 0");
  if (t_s <= 0.0) throw std::invalid_argument("config: t_s must be > 0");
  if (v_t <= 0.0) throw std::invalid_argument("config: v_t must be > 0");
  if (home_horizon <= 0.0) throw std::invalid_argument("config: home_horizon must be > 0");
  if (static_cast<int>(limit_shaping.size()) != n) {
    throw std::invalid_argument("config: limit_shaping size mismatch");
  }
  for (int i = 0; i < n; ++i) {
    const auto& s = limit_shaping[i];
    const auto& j = model.joints[i];
    if (!(j.q_min <= s.g_L && s.g_L < s.g_H && s.g_H <= s.G_L && s.G_L < s.G_H &&
          s.G_H <= j.q_max)) {
      throw std::invalid_argument("config: limit shaping thresholds invalid for joint " + j.name);
    }
  }
}

ControlLayout ControlLayout::make(const RobotModel& model, ControlMode mode, ArmSide primary) {
  ControlLayout l;
  l.map.col_of_joint.assign(model.n_joints(), -1);
  int col = 0;
  for (int i = 0; i < model.n_torso; ++i) l.map.col_of_joint[i] = col++;
  auto map_arm = [&](ArmSide s) {
    for (int i = 0; i < model.n_arm; ++i) l.map.col_of_joint[model.arm_start(s) + i] = col++;
  };
  if (mode == ControlMode::Single) {
    map_arm(primary);
  } else {
    map_arm(ArmSide::Left);
    map_arm(ArmSide::Right);
  }
  l.n_q = col;
  l.n_slack = mode == ControlMode::Single ? 6 : 12;
  l.slack_p_pos = l.n_q;
  l.slack_p_ori = l.n_q + 3;
  if (mode == ControlMode::Dual) {
    l.slack_s_pos = l.n_q + 6;
    l.slack_s_ori = l.n_q + 9;
  }
  l.map.width = l.n_q + l.n_slack;
  return l;
}

std::pair<Eigen::Vector3d, Eigen::Vector3d> desired_spatial_velocity(const Pose& current,
                                                                     const Pose& next,
                                                                     double t_s) {
  if (t_s <= 0.0) throw std::invalid_argument("desired_spatial_velocity: t_s must be > 0");
  const Eigen::Vector3d nu_pos = (next.position - current.position) / t_s;
  const Eigen::Matrix3d rel = next.rotation() * current.rotation().transpose();
  const Eigen::Vector3d nu_ori = rotation_to_axis_angle(rel) / t_s;
  return {nu_pos, nu_ori};
}

double damping_factor(double omega, double omega0) {
  if (omega < omega0) {
    const double e = 1.0 - omega / omega0;
    return e * e + 0.01;
  }
  return 0.01;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> joint_limit_velocity_bounds(
    const RobotModel& model, const Eigen::VectorXd& q, const ControllerConfig& config) {
  const int n = model.n_joints();
  Eigen::VectorXd lower(n), upper(n);
  for (int i = 0; i < n; ++i) {
    const auto& s = config.limit_shaping[i];
    double c_min;
    if (q[i] < s.g_L) {
      c_min = 0.0;
    } else if (q[i] <= s.g_H) {
      c_min = (q[i] - s.g_L) / (s.g_H - s.g_L);
    } else {
      c_min = 1.0;
    }
    double c_max;
    if (q[i] > s.G_H) {
      c_max = 0.0;
    } else if (q[i] >= s.G_L) {
      c_max = (q[i] - s.G_H) / (s.G_L - s.G_H);
    } else {
      c_max = 1.0;
    }
    lower[i] = model.joints[i].qd_min * c_min;
    upper[i] = model.joints[i].qd_max * c_max;
  }
  return {lower, upper};
}

Eigen::VectorXd home_posture_velocity(const Eigen::VectorXd& q, const Eigen::VectorXd& q_home,
                                      double horizon, const Eigen::VectorXd& qd_lower,
                                      const Eigen::VectorXd& qd_upper) {
  Eigen::VectorXd qd = (q_home - q) / horizon;
  return qd.cwiseMax(qd_lower).cwiseMin(qd_upper);
}

void relative_position_rows(const RobotModel& model, const Eigen::VectorXd& q,
                            const ControlLayout& layout, ArmSide primary,
                            const Eigen::Vector3d& d_rel, double t_s, Eigen::MatrixXd& A,
                            Eigen::VectorXd& b) {
  if (layout.n_slack != 12) {
    throw std::invalid_argument("relative_position_rows: dual mode only");
  }
  const ArmSide secondary = other_arm(primary);
  const auto Jp = jacobian_blocks(model, q, primary, model.ee_frame(primary));
  const auto Js = jacobian_blocks(model, q, secondary, model.ee_frame(secondary));
  A = Eigen::MatrixXd::Zero(3, layout.width());
  for (int i = 0; i < model.n_torso; ++i) {
    A.col(layout.map.col_of_joint[i]) = Jp.torso_pos.col(i) - Js.torso_pos.col(i);
  }
  for (int i = 0; i < model.n_arm; ++i) {
    A.col(layout.map.col_of_joint[model.arm_start(primary) + i]) = Jp.arm_pos.col(i);
    A.col(layout.map.col_of_joint[model.arm_start(secondary) + i]) = -Js.arm_pos.col(i);
  }
  const Eigen::Vector3d x_p = forward_kinematics(model, q, model.ee_frame(primary)).translation();
  const Eigen::Vector3d x_s =
      forward_kinematics(model, q, model.ee_frame(secondary)).translation();
  b = (d_rel - (x_p - x_s)) / t_s;
}

QpProblem build_problem(const RobotModel& model, const Eigen::VectorXd& q,
                        const ControllerConfig& config, const ControlLayout& layout,
                        const ProblemInputs& in, const Eigen::MatrixXd& A_obstacle,
                        const Eigen::VectorXd& b_obstacle, const Eigen::MatrixXd& A_task_eq,
                        const Eigen::VectorXd& b_task_eq) {
  const int w = layout.width();
  const bool dual = layout.n_slack == 12;

  QpProblem p;
  p.H = Eigen::MatrixXd::Zero(w, w);
  p.g = Eigen::VectorXd::Zero(w);
  for (int j = 0; j < model.n_joints(); ++j) {
    const int col = layout.map.col_of_joint[j];
    if (col < 0) continue;
    p.H(col, col) = (in.mu + config.home_weight) * config.joint_weights[j];
    p.g[col] = -config.home_weight * config.joint_weights[j] * in.qd_home[j];
  }
  for (int k = 0; k < layout.n_slack; ++k) {
    const bool ori_block = (k / 3) % 2 == 1;
    p.H(layout.n_q + k, layout.n_q + k) =
        ori_block ? config.slack_weight_ori : config.slack_weight_pos;
  }

  // Trajectory equality blocks (primary pos/ori, then secondary in dual mode),
  // each with a -I slack block, followed by the task equality rows.
  const int n_traj = dual ? 12 : 6;
  const int n_eq = n_traj + static_cast<int>(A_task_eq.rows());
  p.A_eq = Eigen::MatrixXd::Zero(n_eq, w);
  p.b_eq.resize(n_eq);

  auto fill_block = [&](int row0, ArmSide side, const JacobianBlocks& jac, bool ori,
                        int slack_col, const Eigen::Vector3d& nu) {
    const auto& torso = ori ? jac.torso_ori : jac.torso_pos;
    const auto& arm = ori ? jac.arm_ori : jac.arm_pos;
    for (int i = 0; i < model.n_torso; ++i) {
      p.A_eq.block<3, 1>(row0, layout.map.col_of_joint[i]) = torso.col(i);
    }
    for (int i = 0; i < model.n_arm; ++i) {
      p.A_eq.block<3, 1>(row0, layout.map.col_of_joint[model.arm_start(side) + i]) = arm.col(i);
    }
    p.A_eq.block<3, 3>(row0, slack_col) = -Eigen::Matrix3d::Identity();
    p.b_eq.segment<3>(row0) = nu;
  };

  const ArmSide primary = config.primary_arm;
  fill_block(0, primary, in.jac_primary, false, layout.slack_p_pos, in.nu_p_pos);
  fill_block(3, primary, in.jac_primary, true, layout.slack_p_ori, in.nu_p_ori);
  if (dual) {
    const ArmSide secondary = other_arm(primary);
    fill_block(6, secondary, in.jac_secondary, false, layout.slack_s_pos, in.nu_s_pos);
    fill_block(9, secondary, in.jac_secondary, true, layout.slack_s_ori, in.nu_s_ori);
  }
  if (A_task_eq.rows() > 0) {
    if (A_task_eq.cols() != w) throw std::invalid_argument("build_problem: task row width mismatch");
    p.A_eq.bottomRows(A_task_eq.rows()) = A_task_eq;
    p.b_eq.tail(b_task_eq.size()) = b_task_eq;
  }

  if (A_obstacle.rows() > 0 && A_obstacle.cols() != w) {
    throw std::invalid_argument("build_problem: obstacle row width mismatch");
  }
  p.A_in = A_obstacle;
  p.b_in = b_obstacle;
  if (p.A_in.rows() == 0) {
    p.A_in.resize(0, w);
    p.b_in.resize(0);
  }

  // Box bounds: shaped joint-velocity limits; slack bounds follow the epsilon
  // policy (0 for the primary position slack unless relaxed, infinity else).
  p.lb = Eigen::VectorXd::Constant(w, -kInf);
  p.ub = Eigen::VectorXd::Constant(w, kInf);
  const auto [qd_lower, qd_upper] = joint_limit_velocity_bounds(model, q, config);
  for (int j = 0; j < model.n_joints(); ++j) {
    const int col = layout.map.col_of_joint[j];
    if (col < 0) continue;
    p.lb[col] = qd_lower[j];
    p.ub[col] = qd_upper[j];
  }
  if (!in.relax_primary_position) {
    for (int k = 0; k < 3; ++k) {
      p.lb[layout.slack_p_pos + k] = 0.0;
      p.ub[layout.slack_p_pos + k] = 0.0;
    }
  }
  return p;
}

Controller::Controller(const RobotModel& model, ControllerConfig config)
    : model_(model),
      config_(std::move(config)),
      layout_(ControlLayout::make(model, config_.mode, config_.primary_arm)),
      solver_(config_.qp_tol, config_.qp_max_iter) {
  config_.validate(model_);
}

ControlState Controller::make_state(const Eigen::VectorXd& q0) const {
  if (q0.size() != model_.n_joints()) throw std::invalid_argument("make_state: q0 size mismatch");
  ControlState s;
  s.q = q0;
  return s;
}

std::vector<const BodyPart*> Controller::controlled_parts() const {
  std::vector<const BodyPart*> parts;
  for (const auto& p : model_.parts) {
    if (!p.side || config_.mode == ControlMode::Dual || *p.side == config_.primary_arm) {
      parts.push_back(&p);
    }
  }
  return parts;
}

StepResult Controller::control_step(ControlState& state,
                                    const std::optional<ArmTarget>& target_primary,
                                    const std::optional<ArmTarget>& target_secondary,
                                    std::vector<SensorEvent> events,
                                    const std::vector<Eigen::Vector3d>& static_samples,
                                    const std::optional<Eigen::Vector3d>& d_rel) {
  const double t_s = config_.t_s;
  const ArmSide primary = config_.primary_arm;
  const ArmSide secondary = other_arm(primary);
  const bool dual = config_.mode == ControlMode::Dual;

  // 1. Sensor events -> collision set update.
  std::vector<VisualKeypoint> keypoints;
  std::vector<ProximityReading> proximity;
  std::vector<TactileContact> tactile;
  for (auto& e : events) {
    std::visit(
        [&](auto&& ev) {
          using T = std::decay_t<decltype(ev)>;
          if constexpr (std::is_same_v<T, VisualKeypoint>) keypoints.push_back(ev);
          if constexpr (std::is_same_v<T, ProximityReading>) proximity.push_back(ev);
          if constexpr (std::is_same_v<T, TactileContact>) tactile.push_back(ev);
        },
        e);
  }
  const auto& av = config_.avoidance;
  std::vector<CollisionPoint> observed;
  auto absorb = [&observed](std::vector<CollisionPoint> pts) {
    for (auto& p : pts) observed.push_back(std::move(p));
  };
  const auto parts = controlled_parts();
  absorb(project_visual(keypoints, model_, state.q, av, parts));
  absorb(project_proximity(proximity, model_, state.q, av));
  absorb(cluster_tactile(tactile, model_, state.q, av));
  absorb(self_collision_points(model_, state.q, av, config_.mode, primary));
  absorb(static_obstacle_points(static_samples, model_, state.q, av, parts));
  state.collisions.refresh(observed, av.survival_time);
  state.collisions.decay_and_expire(t_s);

  // 2. Per-arm targets and next-pose sampling.
  auto process_target = [&](ArmSide side, const std::optional<ArmTarget>& cmd) {
    if (!cmd) return;
    state.target(side) = cmd->pose;
    state.mode(side) = cmd->mode;
    if (cmd->mode == TargetMode::Discrete && cmd->is_new) {
      const Pose current = forward_kinematics_pose(model_, state.q, model_.ee_frame(side));
      state.reach(side).emplace(current, cmd->pose, config_.v_t, t_s, config_.t_min());
    }
  };
  process_target(primary, target_primary);
  if (dual) process_target(secondary, target_secondary);

  auto next_pose = [&](ArmSide side, const Pose& current) -> Pose {
    if (!state.target(side)) return current;  // no task: hold
    if (state.mode(side) == TargetMode::Streamed) return *state.target(side);
    if (!state.reach(side)) return current;
    return state.reach(side)->step();
  };

  ProblemInputs in;
  const Pose current_p = forward_kinematics_pose(model_, state.q, model_.ee_frame(primary));
  const Pose next_p = next_pose(primary, current_p);
  std::tie(in.nu_p_pos, in.nu_p_ori) = desired_spatial_velocity(current_p, next_p, t_s);
  in.jac_primary = jacobian_blocks(model_, state.q, primary, model_.ee_frame(primary));

  Eigen::MatrixXd J_pos_p(3, model_.n_torso + model_.n_arm);
  J_pos_p << in.jac_primary.torso_pos, in.jac_primary.arm_pos;
  double mu = damping_factor(manipulability(J_pos_p), config_.omega0);
  if (dual) {
    const Pose current_s = forward_kinematics_pose(model_, state.q, model_.ee_frame(secondary));
    const Pose next_s = next_pose(secondary, current_s);
    std::tie(in.nu_s_pos, in.nu_s_ori) = desired_spatial_velocity(current_s, next_s, t_s);
    in.jac_secondary = jacobian_blocks(model_, state.q, secondary, model_.ee_frame(secondary));
    Eigen::MatrixXd J_pos_s(3, model_.n_torso + model_.n_arm);
    J_pos_s << in.jac_secondary.torso_pos, in.jac_secondary.arm_pos;
    mu = std::max(mu, damping_factor(manipulability(J_pos_s), config_.omega0));
  }
  in.mu = mu;

  const auto [qd_lower, qd_upper] = joint_limit_velocity_bounds(model_, state.q, config_);
  in.qd_home = home_posture_velocity(state.q, config_.q_home, config_.home_horizon, qd_lower,
                                     qd_upper);

  // 3. Collision and task rows.
  Eigen::MatrixXd A_o;
  Eigen::VectorXd b_o;
  constraint_rows(state.collisions.points(), model_, state.q, av, layout_.map, A_o, b_o);
  Eigen::MatrixXd A_task(0, layout_.width());
  Eigen::VectorXd b_task(0);
  if (d_rel) {
    relative_position_rows(model_, state.q, layout_, primary, *d_rel, t_s, A_task, b_task);
  }

  // 4. Solve; on infeasibility relax the primary position slack and retry.
  StepResult result;
  result.diagnostics.mu = mu;
  result.diagnostics.collision_rows = static_cast<int>(b_o.size());

  QpProblem problem = build_problem(model_, state.q, config_, layout_, in, A_o, b_o, A_task,
                                    b_task);
  if (dump_ != nullptr) problem.dump(*dump_);
  QpSolution sol = solver_.solve(problem, state.last_active_set);
  if (sol.status == QpStatus::Infeasible) {
    in.relax_primary_position = true;
    result.diagnostics.fallback_used = true;
    problem = build_problem(model_, state.q, config_, layout_, in, A_o, b_o, A_task, b_task);
    if (dump_ != nullptr) problem.dump(*dump_);
    sol = solver_.solve(problem, state.last_active_set);
  }

  result.diagnostics.status = sol.status;
  result.diagnostics.kkt_residual = sol.kkt_residual;
  result.diagnostics.iterations = sol.iterations;
  result.qd = Eigen::VectorXd::Zero(model_.n_joints());
  result.diagnostics.slack = Eigen::VectorXd::Zero(layout_.n_slack);

  if (sol.status == QpStatus::Infeasible) {
    result.diagnostics.frozen = true;  // second infeasible: freeze and flag
  } else {
    if (!sol.x.allFinite()) {
      std::ostringstream os;
      os << "control_step: non-finite solution at tick " << state.tick << "\n";
      problem.dump(os);
      throw std::runtime_error(os.str());
    }
    for (int j = 0; j < model_.n_joints(); ++j) {
      const int col = layout_.map.col_of_joint[j];
      if (col >= 0) result.qd[j] = sol.x[col];
    }
    result.diagnostics.slack = sol.x.segment(layout_.n_q, layout_.n_slack);
    state.last_active_set = sol.active_set;
  }

  // 5. Integrate and clamp (the clamp must be a no-op when the QP is honest).
  state.q += result.qd * t_s;
  for (int j = 0; j < model_.n_joints(); ++j) {
    const double clamped = std::clamp(state.q[j], model_.joints[j].q_min, model_.joints[j].q_max);
    if (std::abs(clamped - state.q[j]) > 1e-12) {
      result.diagnostics.limit_clamped = true;
      state.q[j] = clamped;
    }
  }
  ++state.tick;
  return result;
}

}  // namespace wbmc
