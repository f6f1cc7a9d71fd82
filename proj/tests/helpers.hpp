#pragma once

#include <cmath>

#include "wbmc/kinematics.hpp"

namespace wbmc::test {

/// Planar 7-joint model (1 torso + 2x3 arm), every axis vertical: closed-form
/// positions for oracle checks. Shoulders sit 0.2 m out along the torso link,
/// offset laterally so the two arms do not coincide.
inline RobotModel make_planar_model() {
  RobotModel m;
  m.name = "planar";
  m.n_torso = 1;
  m.n_arm = 3;

  auto joint = [](const char* name, double a, int parent) {
    JointDescriptor j;
    j.name = name;
    j.a = a;
    j.d = 0.0;
    j.alpha = 0.0;
    j.theta_offset = 0.0;
    j.q_min = -3.0;
    j.q_max = 3.0;
    j.qd_min = -2.0;
    j.qd_max = 2.0;
    j.parent = parent;
    return j;
  };

  m.joints.push_back(joint("torso", 0.0, -1));
  const double lengths[3] = {0.3, 0.25, 0.15};
  const char* names[2][3] = {{"l1", "l2", "l3"}, {"r1", "r2", "r3"}};
  for (int arm = 0; arm < 2; ++arm) {
    for (int i = 0; i < 3; ++i) {
      JointDescriptor j = joint(names[arm][i], lengths[i], i == 0 ? 0 : int(m.joints.size()) - 1);
      if (i == 0) {
        j.pre = Eigen::Isometry3d::Identity();
        j.pre.translation() = Eigen::Vector3d(0.2, arm == 0 ? 0.05 : -0.05, 0.0);
      }
      m.joints.push_back(j);
    }
  }
  m.left_tool.translation() = Eigen::Vector3d(0.05, 0.0, 0.0);
  m.right_tool.translation() = Eigen::Vector3d(0.05, 0.0, 0.0);

  auto part = [](const char* name, BodyPartKind kind, std::optional<ArmSide> side,
                 std::vector<int> links, double k2) {
    BodyPart p;
    p.name = name;
    p.kind = kind;
    p.side = side;
    p.links = std::move(links);
    p.k2 = k2;
    for (int l : p.links) {
      p.samples.push_back({l, Eigen::Vector3d(0.0, 0.03, 0.0)});
      p.samples.push_back({l, Eigen::Vector3d(-0.1, -0.03, 0.0)});
    }
    return p;
  };
  m.parts.push_back(part("torso", BodyPartKind::Torso, std::nullopt, {0}, 0.06));
  m.parts.push_back(part("l_upper", BodyPartKind::UpperArm, ArmSide::Left, {1}, 0.06));
  m.parts.push_back(part("l_fore", BodyPartKind::Forearm, ArmSide::Left, {2}, 0.33));
  m.parts.push_back(part("l_hand", BodyPartKind::Hand, ArmSide::Left, {3}, 0.53));
  m.parts.push_back(part("r_upper", BodyPartKind::UpperArm, ArmSide::Right, {4}, 0.06));
  m.parts.push_back(part("r_fore", BodyPartKind::Forearm, ArmSide::Right, {5}, 0.33));
  m.parts.push_back(part("r_hand", BodyPartKind::Hand, ArmSide::Right, {6}, 0.53));

  m.proximity_sensors.push_back(
      {"l_palm", 3, Eigen::Vector3d(0.02, 0.0, 0.0), Eigen::Vector3d(0.0, 1.0, 0.0)});

  m.q_home = Eigen::VectorXd::Zero(7);
  m.validate();
  return m;
}

/// Closed-form world position of the left-arm tool point of the planar model.
inline Eigen::Vector2d planar_left_tool(const Eigen::VectorXd& q) {
  const double base = q[0];
  double angle = base;
  Eigen::Vector2d p =
      Eigen::Vector2d(std::cos(base) * 0.2 - std::sin(base) * 0.05,
                      std::sin(base) * 0.2 + std::cos(base) * 0.05);
  const double lengths[3] = {0.3, 0.25, 0.15};
  for (int i = 0; i < 3; ++i) {
    angle += q[1 + i];
    p += lengths[i] * Eigen::Vector2d(std::cos(angle), std::sin(angle));
  }
  angle += 0.0;
  p += 0.05 * Eigen::Vector2d(std::cos(angle), std::sin(angle));  // tool
  return p;
}

/// Central-difference Jacobian of a frame's position/orientation.
inline Eigen::MatrixXd finite_difference_jacobian(const RobotModel& m, const Eigen::VectorXd& q,
                                                  const FrameRef& frame, double h = 1e-6) {
  Eigen::MatrixXd J(6, m.n_joints());
  for (int j = 0; j < m.n_joints(); ++j) {
    Eigen::VectorXd qp = q, qm = q;
    qp[j] += h;
    qm[j] -= h;
    const Eigen::Isometry3d Tp = forward_kinematics(m, qp, frame);
    const Eigen::Isometry3d Tm = forward_kinematics(m, qm, frame);
    J.block<3, 1>(0, j) = (Tp.translation() - Tm.translation()) / (2.0 * h);
    // Angular velocity from the skew part of Rdot R^T.
    const Eigen::Matrix3d Rdot = (Tp.rotation() - Tm.rotation()) / (2.0 * h);
    const Eigen::Matrix3d W = Rdot * forward_kinematics(m, q, frame).rotation().transpose();
    J.block<3, 1>(3, j) = Eigen::Vector3d(W(2, 1), W(0, 2), W(1, 0));
  }
  return J;
}

}  // namespace wbmc::test
