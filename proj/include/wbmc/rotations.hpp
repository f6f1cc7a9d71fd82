#pragma once

#include <Eigen/Dense>

namespace wbmc {

/// Rodrigues formula. r encodes axis r/||r|| and angle ||r||.
Eigen::Matrix3d axis_angle_to_rotation(const Eigen::Vector3d& r);

/// Inverse of axis_angle_to_rotation, angle wrapped to [0, pi].
/// Throws std::invalid_argument if R is not orthonormal with det +1 (tol 1e-8).
Eigen::Vector3d rotation_to_axis_angle(const Eigen::Matrix3d& R);

/// Wraps a rotation vector so that ||r|| lies in [0, pi].
Eigen::Vector3d canonical_axis_angle(const Eigen::Vector3d& r);

/// Angle of R1^T R2, in [0, pi].
double geodesic_angle(const Eigen::Matrix3d& R1, const Eigen::Matrix3d& R2);

bool is_rotation(const Eigen::Matrix3d& R, double tol = 1e-8);

/// Skew-symmetric matrix such that skew(a) b = a x b.
Eigen::Matrix3d skew(const Eigen::Vector3d& a);

/// End-effector pose: position plus canonical rotation vector.
struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d orientation = Eigen::Vector3d::Zero();  // axis-angle, ||r|| in [0, pi]

  Eigen::Matrix3d rotation() const { return axis_angle_to_rotation(orientation); }

  static Pose from_transform(const Eigen::Isometry3d& T) {
    return Pose{T.translation(), rotation_to_axis_angle(T.rotation())};
  }
  static Pose from_rotation(const Eigen::Vector3d& p, const Eigen::Matrix3d& R) {
    return Pose{p, rotation_to_axis_angle(R)};
  }
};

}  // namespace wbmc
