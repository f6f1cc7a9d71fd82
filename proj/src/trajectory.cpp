#include "wbmc/trajectory.hpp"

#include <cmath>
#include <stdexcept>

namespace wbmc {

double execution_time(const Eigen::Vector3d& x_d, const Eigen::Vector3d& x_0, double v_t,
                      double t_min) {
  if (v_t <= 0.0) throw std::invalid_argument("execution_time: v_t must be > 0");
  return std::max((x_d - x_0).norm() / v_t, t_min);
}

MinJerkFilter::MinJerkFilter(double horizon, double step) : T_(horizon), ts_(step) {
  if (!(T_ > 0.0) || !(ts_ > 0.0) || ts_ > T_ / 10.0 + 1e-12) {
    throw std::invalid_argument("MinJerkFilter: need T > 0, t_s > 0 and t_s <= T/10");
  }
}

void MinJerkFilter::reset(const Eigen::Vector3d& x0) {
  x_ = x0;
  xd_.setZero();
  // Equilibrium of the internal state at rest at x0 (zero true acceleration).
  xdd_ = -MinJerkCoeffs::d / (T_ * T_) * x0;
  u_ = x0;
}

const Eigen::Vector3d& MinJerkFilter::step(const Eigen::Vector3d& x_d) {
  if (!x_d.allFinite()) throw std::invalid_argument("MinJerkFilter: non-finite input");
  const double a3 = MinJerkCoeffs::a / (T_ * T_ * T_);
  const double b2 = MinJerkCoeffs::b / (T_ * T_);
  const double c1 = MinJerkCoeffs::c / T_;
  const double d2 = MinJerkCoeffs::d / (T_ * T_);
  // Unit DC gain: the input weight on the last row balances the zero.
  const double e3 = (MinJerkCoeffs::c * MinJerkCoeffs::d - MinJerkCoeffs::a) / (T_ * T_ * T_);
  // State derivative with the input held constant; the third state is the
  // acceleration minus the feedforward term d2 * x_d.
  auto deriv = [&](const Eigen::Vector3d& x, const Eigen::Vector3d& xd,
                   const Eigen::Vector3d& xdd, Eigen::Vector3d& dx, Eigen::Vector3d& dxd,
                   Eigen::Vector3d& dxdd) {
    dx = xd;
    dxd = xdd + d2 * x_d;
    dxdd = a3 * x + b2 * xd + c1 * xdd + e3 * x_d;
  };
  Eigen::Vector3d k1x, k1v, k1a, k2x, k2v, k2a, k3x, k3v, k3a, k4x, k4v, k4a;
  deriv(x_, xd_, xdd_, k1x, k1v, k1a);
  deriv(x_ + 0.5 * ts_ * k1x, xd_ + 0.5 * ts_ * k1v, xdd_ + 0.5 * ts_ * k1a, k2x, k2v, k2a);
  deriv(x_ + 0.5 * ts_ * k2x, xd_ + 0.5 * ts_ * k2v, xdd_ + 0.5 * ts_ * k2a, k3x, k3v, k3a);
  deriv(x_ + ts_ * k3x, xd_ + ts_ * k3v, xdd_ + ts_ * k3a, k4x, k4v, k4a);
  x_ += ts_ / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  xd_ += ts_ / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  xdd_ += ts_ / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
  u_ = x_d;
  if (!x_.allFinite() || !xd_.allFinite() || !xdd_.allFinite()) {
    throw std::runtime_error("MinJerkFilter: state diverged");
  }
  return x_;
}

SlerpResult slerp(const Eigen::Matrix3d& R1, const Eigen::Matrix3d& R2, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("slerp: alpha must be in [0, 1]");
  const Eigen::Matrix3d rel = R2 * R1.transpose();
  const Eigen::Vector3d r = rotation_to_axis_angle(rel);
  SlerpResult out;
  // At exactly pi the geodesic is ambiguous; rotation_to_axis_angle picks the
  // branch deterministically, we only flag it.
  out.geodesic_ambiguous = std::abs(r.norm() - M_PI) < 1e-12;
  out.rotation = axis_angle_to_rotation(alpha * r) * R1;
  return out;
}

OrientationSampler::OrientationSampler(const Eigen::Matrix3d& R1, const Eigen::Matrix3d& R2,
                                       double alpha_per_tick)
    : R1_(R1), R2_(R2), alpha_(alpha_per_tick) {
  if (!(alpha_ > 0.0) || alpha_ > 1.0) {
    throw std::invalid_argument("OrientationSampler: alpha per tick must be in (0, 1]");
  }
  if (!is_rotation(R1) || !is_rotation(R2)) {
    throw std::invalid_argument("OrientationSampler: endpoints must be rotations");
  }
}

Eigen::Matrix3d OrientationSampler::step() {
  s_ = std::min(s_ + alpha_, 1.0);
  return current();
}

Eigen::Matrix3d OrientationSampler::current() const { return slerp(R1_, R2_, s_).rotation; }

ReachSampler::ReachSampler(const Pose& current, const Pose& target, double v_t, double t_s,
                           double t_min)
    : target_(target),
      filter_(execution_time(target.position, current.position, v_t, t_min), t_s),
      orientation_(current.rotation(), target.rotation(),
                   std::min(1.0, t_s / execution_time(target.position, current.position, v_t,
                                                      t_min))) {
  filter_.reset(current.position);
}

Pose ReachSampler::step() {
  const Eigen::Vector3d p = filter_.step(target_.position);
  return Pose::from_rotation(p, orientation_.step());
}

Pose sample_next_pose(const Pose& target, TargetMode mode, ReachSampler* reach) {
  if (mode == TargetMode::Streamed) return target;
  if (reach == nullptr) {
    throw std::invalid_argument("sample_next_pose: discrete mode needs an active reach");
  }
  return reach->step();
}

}  // namespace wbmc
