// Model authoring helpers: inspect frames at q_home, solve for an arm mount
// rotation that realizes a desired hand orientation, and bake capsule surface
// samples into model-file YAML fragments.

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <string>

#include "wbmc/model_io.hpp"

namespace {

void print_vec(const char* label, const Eigen::Vector3d& v) {
  std::printf("%s [%.6f, %.6f, %.6f]\n", label, v.x(), v.y(), v.z());
}

void cmd_info(const wbmc::RobotModel& model) {
  const auto T = wbmc::all_link_transforms(model, model.q_home);
  std::printf("model %s: %d joints (%d torso + 2x%d arm)\n", model.name.c_str(),
              model.n_joints(), model.n_torso, model.n_arm);
  for (int i = 0; i < model.n_joints(); ++i) {
    const Eigen::Vector3d p = T[i].translation();
    std::printf("%-16s world origin [%.4f, %.4f, %.4f]", model.joints[i].name.c_str(), p.x(),
                p.y(), p.z());
    const int parent = model.joints[i].parent;
    if (parent >= 0) {
      const Eigen::Vector3d local = T[parent].inverse() * p;
      std::printf("   in %s frame [%.4f, %.4f, %.4f]", model.joints[parent].name.c_str(),
                  local.x(), local.y(), local.z());
    }
    std::printf("\n");
  }
  for (wbmc::ArmSide side : {wbmc::ArmSide::Left, wbmc::ArmSide::Right}) {
    const wbmc::Pose ee =
        wbmc::forward_kinematics_pose(model, model.q_home, model.ee_frame(side));
    const double angle = ee.orientation.norm();
    const Eigen::Vector3d axis =
        angle < 1e-12 ? Eigen::Vector3d::UnitX() : (ee.orientation / angle).eval();
    std::printf("%s ee: pos [%.4f, %.4f, %.4f]  axis [%.4f, %.4f, %.4f]  angle %.4f\n",
                to_string(side), ee.position.x(), ee.position.y(), ee.position.z(), axis.x(),
                axis.y(), axis.z(), angle);
    const auto blocks = wbmc::jacobian_blocks(model, model.q_home, side, model.ee_frame(side));
    Eigen::MatrixXd J(3, model.n_torso + model.n_arm);
    J << blocks.torso_pos, blocks.arm_pos;
    std::printf("%s ee manipulability at home: %.6f\n", to_string(side),
                wbmc::manipulability(J));
  }
}

/// Rotation (row-major) the arm mount needs so that the hand orientation at
/// q_home equals the requested axis-angle.
void cmd_mount_cal(const wbmc::RobotModel& model, wbmc::ArmSide side,
                   const Eigen::Vector3d& axis, double angle) {
  const int first = model.arm_start(side);
  const auto T = wbmc::all_link_transforms(model, model.q_home);
  const Eigen::Matrix3d R_target =
      wbmc::axis_angle_to_rotation(axis.normalized() * angle);
  const Eigen::Matrix3d R_ee =
      wbmc::forward_kinematics(model, model.q_home, model.ee_frame(side)).rotation();
  // World rotation up to and including the current mount.
  const int parent = model.joints[first].parent;
  const Eigen::Matrix3d A =
      (parent < 0 ? model.base_frame.rotation()
                  : Eigen::Matrix3d(T[parent].rotation()));
  const Eigen::Matrix3d mount_cur = model.joints[first].pre.rotation();
  // R_ee = A * mount_cur * B  =>  B fixed by the DH chain after the mount.
  const Eigen::Matrix3d B = mount_cur.transpose() * A.transpose() * R_ee;
  const Eigen::Matrix3d mount_new = A.transpose() * R_target * B.transpose();
  std::printf("rotation: [");
  for (int i = 0; i < 9; ++i) {
    std::printf("%.12f%s", mount_new(i / 3, i % 3), i == 8 ? "]\n" : ", ");
  }
  const Eigen::Matrix3d check = A * mount_new * B;
  std::printf("residual angle vs target: %.3e rad\n",
              wbmc::geodesic_angle(check, R_target));
}

/// Capsule spec file: a list of {part, link, p0, p1, radius, spacing} entries,
/// everything in the owning link's frame. Prints model-file sample fragments.
void cmd_samples(const std::string& spec_path) {
  const YAML::Node spec = YAML::LoadFile(spec_path);
  for (const auto& cap : spec["capsules"]) {
    const std::string part = cap["part"].as<std::string>();
    const std::string link = cap["link"].as<std::string>();
    const Eigen::Vector3d p0 = wbmc::parse_vec3(cap["p0"]);
    const Eigen::Vector3d p1 = wbmc::parse_vec3(cap["p1"]);
    const double radius = cap["radius"].as<double>();
    const double spacing = cap["spacing"].as<double>(0.03);

    const Eigen::Vector3d axis = p1 - p0;
    const double length = axis.norm();
    const Eigen::Vector3d u = length < 1e-12 ? Eigen::Vector3d::UnitZ() : (axis / length).eval();
    Eigen::Vector3d n1 = u.unitOrthogonal();
    Eigen::Vector3d n2 = u.cross(n1);

    std::printf("# %s (%s): capsule r=%.3f l=%.3f\n", part.c_str(), link.c_str(), radius,
                length);
    auto emit = [&](const Eigen::Vector3d& p) {
      std::printf("      - {link: %s, xyz: [%.4f, %.4f, %.4f]}\n", link.c_str(), p.x(), p.y(),
                  p.z());
    };
    const int n_axial = std::max(1, static_cast<int>(std::ceil(length / spacing)));
    const int n_ring =
        std::max(4, static_cast<int>(std::ceil(2.0 * std::numbers::pi * radius / spacing)));
    for (int i = 0; i <= n_axial; ++i) {
      const Eigen::Vector3d c = p0 + u * (length * i / n_axial);
      for (int k = 0; k < n_ring; ++k) {
        const double phi = 2.0 * std::numbers::pi * k / n_ring;
        emit(c + radius * (std::cos(phi) * n1 + std::sin(phi) * n2));
      }
    }
    emit(p0 - radius * u);  // end caps
    emit(p1 + radius * u);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"model authoring helpers"};
  app.require_subcommand(1);
  std::string model_path = "models/icub_like.yaml";
  app.add_option("--model", model_path, "robot model file")->capture_default_str();

  auto* info = app.add_subcommand("info", "print frames and end-effector poses at q_home");

  auto* mount = app.add_subcommand("mount-cal", "solve a mount rotation for a hand orientation");
  std::string arm = "left";
  std::vector<double> target;
  mount->add_option("--arm", arm, "left or right")->capture_default_str();
  mount->add_option("--target", target, "axis-angle: ax ay az angle")->expected(4)->required();

  auto* samples = app.add_subcommand("samples", "bake capsule surface samples");
  std::string spec_path;
  samples->add_option("spec", spec_path, "capsule spec file")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*samples) {
      cmd_samples(spec_path);
      return 0;
    }
    const wbmc::RobotModel model = wbmc::load_model(model_path);
    if (*info) {
      cmd_info(model);
    } else if (*mount) {
      cmd_mount_cal(model, arm == "right" ? wbmc::ArmSide::Right : wbmc::ArmSide::Left,
                    Eigen::Vector3d(target[0], target[1], target[2]), target[3]);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
