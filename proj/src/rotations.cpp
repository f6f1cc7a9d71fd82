#include "wbmc/rotations.hpp"

#include <cmath>
#include <stdexcept>

namespace wbmc {

Eigen::Matrix3d skew(const Eigen::Vector3d& a) {
  Eigen::Matrix3d S;
  S << 0.0, -a.z(), a.y(), a.z(), 0.0, -a.x(), -a.y(), a.x(), 0.0;
  return S;
}

Eigen::Matrix3d axis_angle_to_rotation(const Eigen::Vector3d& r) {
  const double theta = r.norm();
  if (theta < 1e-12) {
    // First-order expansion keeps the map smooth through zero.
    return Eigen::Matrix3d::Identity() + skew(r);
  }
  const Eigen::Vector3d u = r / theta;
  const Eigen::Matrix3d K = skew(u);
  return Eigen::Matrix3d::Identity() + std::sin(theta) * K +
         (1.0 - std::cos(theta)) * K * K;
}

bool is_rotation(const Eigen::Matrix3d& R, double tol) {
  const double orth = (R.transpose() * R - Eigen::Matrix3d::Identity()).norm();
  return orth < tol && std::abs(R.determinant() - 1.0) < tol;
}

Eigen::Vector3d rotation_to_axis_angle(const Eigen::Matrix3d& R) {
  if (!is_rotation(R)) {
    throw std::invalid_argument("rotation_to_axis_angle: input is not a rotation matrix");
  }
  const double c = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double theta = std::acos(c);
  if (theta < 1e-10) {
    // Near identity: vee of the skew part is first-order exact.
    return 0.5 * Eigen::Vector3d(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  }
  if (theta < M_PI - 1e-6) {
    Eigen::Vector3d axis(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
    axis /= (2.0 * std::sin(theta));
    return theta * axis;
  }
  // Angle near pi: the off-diagonal difference vanishes; recover the axis from
  // the largest diagonal entry of R + I.
  const Eigen::Matrix3d B = 0.5 * (R + Eigen::Matrix3d::Identity());
  int k = 0;
  B.diagonal().maxCoeff(&k);
  Eigen::Vector3d axis = B.col(k) / std::sqrt(std::max(B(k, k), 1e-16));
  axis.normalize();
  // Fix the sign from the skew part when it is not completely degenerate.
  const Eigen::Vector3d v(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  if (v.dot(axis) < 0.0) axis = -axis;
  return theta * axis;
}

Eigen::Vector3d canonical_axis_angle(const Eigen::Vector3d& r) {
  double theta = r.norm();
  if (theta < 1e-12) return r;
  Eigen::Vector3d u = r / theta;
  theta = std::fmod(theta, 2.0 * M_PI);
  if (theta > M_PI) {
    theta = 2.0 * M_PI - theta;
    u = -u;
  }
  return theta * u;
}

double geodesic_angle(const Eigen::Matrix3d& R1, const Eigen::Matrix3d& R2) {
  const double c = std::clamp(((R1.transpose() * R2).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

}  // namespace wbmc
