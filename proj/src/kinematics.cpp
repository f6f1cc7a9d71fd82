#include "wbmc/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace wbmc {

const char* to_string(ArmSide s) { return s == ArmSide::Left ? "left" : "right"; }

const char* to_string(BodyPartKind k) {
  switch (k) {
    case BodyPartKind::Torso: return "torso";
    case BodyPartKind::UpperArm: return "upper_arm";
    case BodyPartKind::Forearm: return "forearm";
    case BodyPartKind::Hand: return "hand";
  }
  return "?";
}

std::optional<ArmSide> RobotModel::arm_of_link(int link) const {
  if (link < n_torso) return std::nullopt;
  return link < n_torso + n_arm ? ArmSide::Left : ArmSide::Right;
}

std::vector<int> RobotModel::chain_to(int link) const {
  if (link < 0 || link >= n_joints()) {
    throw std::invalid_argument("chain_to: link id out of range");
  }
  std::vector<int> chain;
  for (int j = link; j >= 0; j = joints[j].parent) chain.push_back(j);
  std::reverse(chain.begin(), chain.end());
  return chain;
}

FrameRef RobotModel::ee_frame(ArmSide s) const {
  return FrameRef{hand_link(s), tool(s).translation()};
}

FrameRef RobotModel::resolve_frame(const std::string& selector) const {
  if (selector == "left_ee") return ee_frame(ArmSide::Left);
  if (selector == "right_ee") return ee_frame(ArmSide::Right);
  for (int i = 0; i < n_joints(); ++i) {
    if (joints[i].name == selector) return FrameRef{i};
  }
  throw std::invalid_argument("unknown frame selector '" + selector + "'");
}

const BodyPart& RobotModel::part(BodyPartKind kind, std::optional<ArmSide> side) const {
  for (const auto& p : parts) {
    if (p.kind == kind && p.side == side) return p;
  }
  throw std::invalid_argument(std::string("no body part of kind ") + to_string(kind));
}

const BodyPart& RobotModel::part_of_link(int link) const {
  for (const auto& p : parts) {
    for (int l : p.links) {
      if (l == link) return p;
    }
  }
  throw std::invalid_argument("link " + std::to_string(link) + " belongs to no body part");
}

const ProximitySensor& RobotModel::proximity_sensor(const std::string& id) const {
  for (const auto& s : proximity_sensors) {
    if (s.id == id) return s;
  }
  throw std::invalid_argument("unknown proximity sensor '" + id + "'");
}

void RobotModel::validate() const {
  for (const auto& j : joints) {
    if (!(j.q_min < j.q_max)) {
      throw std::invalid_argument("joint " + j.name + ": q_min must be < q_max");
    }
    if (!(j.qd_min < 0.0 && j.qd_max > 0.0)) {
      throw std::invalid_argument("joint " + j.name + ": velocity limits must straddle 0");
    }
  }
  // Every link in exactly one body part.
  std::set<int> seen;
  for (const auto& p : parts) {
    if (p.k2 <= 0.0) throw std::invalid_argument("body part " + p.name + ": k2 must be > 0");
    for (int l : p.links) {
      if (l < 0 || l >= n_joints()) {
        throw std::invalid_argument("body part " + p.name + ": link id out of range");
      }
      if (!seen.insert(l).second) {
        throw std::invalid_argument("link " + std::to_string(l) + " assigned to two body parts");
      }
    }
    for (const auto& s : p.samples) {
      if (std::find(p.links.begin(), p.links.end(), s.link) == p.links.end()) {
        throw std::invalid_argument("body part " + p.name + ": sample on foreign link");
      }
    }
  }
  if (static_cast<int>(seen.size()) != n_joints()) {
    throw std::invalid_argument("some links belong to no body part");
  }
  // Torso sharing: both arm chains must pass through exactly the torso joints.
  if (n_torso + 2 * n_arm != n_joints()) {
    throw std::invalid_argument("joint count does not match torso + two arms");
  }
  for (ArmSide side : {ArmSide::Left, ArmSide::Right}) {
    const auto chain = chain_to(hand_link(side));
    if (static_cast<int>(chain.size()) != n_torso + n_arm) {
      throw std::invalid_argument("arm chain length mismatch");
    }
    for (int i = 0; i < n_torso; ++i) {
      if (chain[i] != i) throw std::invalid_argument("arm chain does not share the torso joints");
    }
  }
  if (q_home.size() != n_joints()) {
    throw std::invalid_argument("q_home dimension mismatch");
  }
}

namespace {

/// DH transform of one joint, excluding its fixed pre-transform.
Eigen::Isometry3d dh_transform(const JointDescriptor& j, double q) {
  const double th = q + j.theta_offset;
  const double ct = std::cos(th), st = std::sin(th);
  const double ca = std::cos(j.alpha), sa = std::sin(j.alpha);
  Eigen::Matrix4d T;
  T << ct, -st * ca, st * sa, j.a * ct,
       st, ct * ca, -ct * sa, j.a * st,
       0.0, sa, ca, j.d,
       0.0, 0.0, 0.0, 1.0;
  Eigen::Isometry3d out;
  out.matrix() = T;
  return out;
}

void check_q(const RobotModel& model, const Eigen::VectorXd& q) {
  if (q.size() != model.n_joints()) {
    throw std::invalid_argument("q has " + std::to_string(q.size()) + " entries, model has " +
                                std::to_string(model.n_joints()) + " joints");
  }
}

void check_frame(const RobotModel& model, const FrameRef& frame) {
  if (frame.link < 0 || frame.link >= model.n_joints()) {
    throw std::invalid_argument("frame selector names link " + std::to_string(frame.link) +
                                ", model has " + std::to_string(model.n_joints()) + " links");
  }
}

struct ChainGeometry {
  std::vector<int> chain;
  std::vector<Eigen::Vector3d> axes;     // joint rotation axes in world
  std::vector<Eigen::Vector3d> origins;  // joint origins in world
  Eigen::Isometry3d tip = Eigen::Isometry3d::Identity();
};

ChainGeometry chain_geometry(const RobotModel& model, const Eigen::VectorXd& q, int link) {
  ChainGeometry g;
  g.chain = model.chain_to(link);
  Eigen::Isometry3d T = model.base_frame;
  for (int j : g.chain) {
    const Eigen::Isometry3d T_pre = T * model.joints[j].pre;
    g.axes.push_back(T_pre.rotation().col(2));
    g.origins.push_back(T_pre.translation());
    T = T_pre * dh_transform(model.joints[j], q[j]);
  }
  g.tip = T;
  return g;
}

}  // namespace

Eigen::Isometry3d forward_kinematics(const RobotModel& model, const Eigen::VectorXd& q,
                                     const FrameRef& frame) {
  check_q(model, q);
  check_frame(model, frame);
  Eigen::Isometry3d T = chain_geometry(model, q, frame.link).tip;
  T.translation() += T.rotation() * frame.local;
  return T;
}

Pose forward_kinematics_pose(const RobotModel& model, const Eigen::VectorXd& q,
                             const FrameRef& frame) {
  return Pose::from_transform(forward_kinematics(model, q, frame));
}

Eigen::MatrixXd jacobian(const RobotModel& model, const Eigen::VectorXd& q,
                         const FrameRef& frame) {
  check_q(model, q);
  check_frame(model, frame);
  const ChainGeometry g = chain_geometry(model, q, frame.link);
  const Eigen::Vector3d p = g.tip.translation() + g.tip.rotation() * frame.local;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(6, model.n_joints());
  for (size_t i = 0; i < g.chain.size(); ++i) {
    const int col = g.chain[i];
    J.block<3, 1>(0, col) = g.axes[i].cross(p - g.origins[i]);
    J.block<3, 1>(3, col) = g.axes[i];
  }
  return J;
}

JacobianBlocks jacobian_blocks(const RobotModel& model, const Eigen::VectorXd& q, ArmSide side,
                               const FrameRef& frame) {
  if (auto arm = model.arm_of_link(frame.link); arm && *arm != side) {
    throw std::invalid_argument("jacobian_blocks: frame is on the other arm");
  }
  const Eigen::MatrixXd J = jacobian(model, q, frame);
  JacobianBlocks b;
  b.torso_pos = J.block(0, 0, 3, model.n_torso);
  b.torso_ori = J.block(3, 0, 3, model.n_torso);
  b.arm_pos = J.block(0, model.arm_start(side), 3, model.n_arm);
  b.arm_ori = J.block(3, model.arm_start(side), 3, model.n_arm);
  return b;
}

std::vector<Eigen::Isometry3d> all_link_transforms(const RobotModel& model,
                                                   const Eigen::VectorXd& q) {
  check_q(model, q);
  std::vector<Eigen::Isometry3d> T(model.n_joints());
  for (int i = 0; i < model.n_joints(); ++i) {
    // Parents always precede children in the joint numbering.
    const Eigen::Isometry3d parent =
        model.joints[i].parent < 0 ? model.base_frame : T[model.joints[i].parent];
    T[i] = parent * model.joints[i].pre * dh_transform(model.joints[i], q[i]);
  }
  return T;
}

double manipulability(const Eigen::MatrixXd& J) {
  if (J.cols() < J.rows()) {
    throw std::invalid_argument("manipulability: J must have at least as many columns as rows");
  }
  const double det = (J * J.transpose()).determinant();
  return std::sqrt(std::max(det, 0.0));
}

}  // namespace wbmc
