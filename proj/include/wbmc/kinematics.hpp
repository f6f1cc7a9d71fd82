#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wbmc/rotations.hpp"

namespace wbmc {

/// Revolute joint described by a standard DH row:
/// T = RotZ(q + theta_offset) TransZ(d) TransX(a) RotX(alpha),
/// optionally preceded by a fixed mounting transform.
struct JointDescriptor {
  std::string name;
  double a = 0.0;
  double d = 0.0;
  double alpha = 0.0;
  double theta_offset = 0.0;
  double q_min = 0.0;
  double q_max = 0.0;   // rad, q_min < q_max
  double qd_min = 0.0;
  double qd_max = 0.0;  // rad/s, qd_min < 0 < qd_max
  int parent = -1;      // joint index, -1 for the chain root
  Eigen::Isometry3d pre = Eigen::Isometry3d::Identity();
};

enum class ArmSide { Left, Right };
enum class BodyPartKind { Torso, UpperArm, Forearm, Hand };

inline ArmSide other_arm(ArmSide s) { return s == ArmSide::Left ? ArmSide::Right : ArmSide::Left; }
const char* to_string(ArmSide s);
const char* to_string(BodyPartKind k);

/// Point on the robot surface, expressed in the local frame of one link.
struct SurfaceSample {
  int link = -1;
  Eigen::Vector3d local = Eigen::Vector3d::Zero();
};

struct BodyPart {
  std::string name;
  BodyPartKind kind = BodyPartKind::Torso;
  std::optional<ArmSide> side;  // empty for the torso
  std::vector<int> links;       // global joint/link ids owned by this part
  double k2 = 0.0;              // obstacle-constraint scale for this part
  std::vector<SurfaceSample> samples;
};

/// Proximity sensor mounted rigidly on a link; beam in the link frame.
struct ProximitySensor {
  std::string id;
  int link = -1;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d beam = Eigen::Vector3d::UnitZ();
};

/// Frame selector: a link frame with an optional local offset.
struct FrameRef {
  int link = -1;
  Eigen::Vector3d local = Eigen::Vector3d::Zero();
};

/// Dual-arm serial-chain model with a shared torso.
/// Joint/link numbering: torso [0, n_torso), left arm, right arm.
class RobotModel {
 public:
  std::string name;
  int format_version = 0;
  Eigen::Isometry3d base_frame = Eigen::Isometry3d::Identity();
  std::vector<JointDescriptor> joints;
  int n_torso = 0;
  int n_arm = 0;
  Eigen::Isometry3d left_tool = Eigen::Isometry3d::Identity();
  Eigen::Isometry3d right_tool = Eigen::Isometry3d::Identity();
  std::vector<BodyPart> parts;
  std::vector<ProximitySensor> proximity_sensors;
  Eigen::VectorXd q_home;

  int n_joints() const { return static_cast<int>(joints.size()); }
  int arm_start(ArmSide s) const { return s == ArmSide::Left ? n_torso : n_torso + n_arm; }
  int hand_link(ArmSide s) const { return arm_start(s) + n_arm - 1; }
  const Eigen::Isometry3d& tool(ArmSide s) const {
    return s == ArmSide::Left ? left_tool : right_tool;
  }
  bool is_torso_link(int link) const { return link >= 0 && link < n_torso; }
  std::optional<ArmSide> arm_of_link(int link) const;

  /// Joint ids from the root to `link`, inclusive.
  std::vector<int> chain_to(int link) const;

  /// End-effector frame of one arm (hand link frame composed with the tool).
  FrameRef ee_frame(ArmSide s) const;

  /// Resolves "<joint name>", "left_ee", or "right_ee". Throws on unknown names.
  FrameRef resolve_frame(const std::string& selector) const;

  const BodyPart& part(BodyPartKind kind, std::optional<ArmSide> side) const;
  const BodyPart& part_of_link(int link) const;
  const ProximitySensor& proximity_sensor(const std::string& id) const;

  /// Checks structural invariants (limits, partition, torso sharing). Throws on violation.
  void validate() const;
};

/// Torso/arm blocks of the geometric Jacobian at one point of an arm chain.
struct JacobianBlocks {
  Eigen::Matrix3Xd torso_pos;  // 3 x n_torso
  Eigen::Matrix3Xd torso_ori;
  Eigen::Matrix3Xd arm_pos;  // 3 x n_arm
  Eigen::Matrix3Xd arm_ori;
};

/// World transform of the selected frame. Throws on bad selector or q size.
Eigen::Isometry3d forward_kinematics(const RobotModel& model, const Eigen::VectorXd& q,
                                     const FrameRef& frame);
Pose forward_kinematics_pose(const RobotModel& model, const Eigen::VectorXd& q,
                             const FrameRef& frame);

/// Geometric Jacobian with one column per model joint; columns of joints that do
/// not move the frame are zero. Rows 0-2 position, 3-5 orientation.
Eigen::MatrixXd jacobian(const RobotModel& model, const Eigen::VectorXd& q,
                         const FrameRef& frame);

/// Ee-chain Jacobian split into torso and arm blocks. The torso block is
/// identical regardless of which arm chain it is requested through.
JacobianBlocks jacobian_blocks(const RobotModel& model, const Eigen::VectorXd& q, ArmSide side,
                               const FrameRef& frame);

/// World transforms of every link frame, indexed by joint id.
std::vector<Eigen::Isometry3d> all_link_transforms(const RobotModel& model,
                                                   const Eigen::VectorXd& q);

/// Yoshikawa manipulability index sqrt(det(J J^T)); clamped at 0.
double manipulability(const Eigen::MatrixXd& J);

}  // namespace wbmc
