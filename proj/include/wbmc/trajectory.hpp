#pragma once

#include <Eigen/Dense>

#include "wbmc/rotations.hpp"

namespace wbmc {

/// Coefficients of the third-order LTI approximation of the minimum-jerk
/// system, fitted numerically to the analytic profile over [0, 3T] (max
/// position deviation 2.8% of travel, terminal error 1.3%, terminal speed
/// 4.5% of peak). `d` is the feedforward zero that lets the response settle
/// at T instead of trailing a slow exponential tail.
struct MinJerkCoeffs {
  static constexpr double a = -101.157;
  static constexpr double b = -49.089;
  static constexpr double c = -8.203;
  static constexpr double d = -3.433;
};

/// T = ||x_d - x_0|| / v_t, floored at t_min.
double execution_time(const Eigen::Vector3d& x_d, const Eigen::Vector3d& x_0, double v_t,
                      double t_min);

/// Quasi-minimum-jerk third-order filter, one (x, xd, xdd) state per Cartesian
/// axis, integrated with fixed-step RK4 at the control period.
class MinJerkFilter {
 public:
  /// Throws std::invalid_argument unless T > 0, t_s > 0 and t_s <= T/10.
  MinJerkFilter(double horizon, double step);

  /// Resets to position x0 with zero velocity and acceleration.
  void reset(const Eigen::Vector3d& x0);

  /// One RK4 step with constant input x_d. Throws on non-finite input.
  const Eigen::Vector3d& step(const Eigen::Vector3d& x_d);

  const Eigen::Vector3d& position() const { return x_; }
  const Eigen::Vector3d& velocity() const { return xd_; }
  /// True second derivative: internal state plus the feedforward term.
  Eigen::Vector3d acceleration() const {
    return xdd_ + MinJerkCoeffs::d / (T_ * T_) * u_;
  }
  double horizon() const { return T_; }

 private:
  double T_;
  double ts_;
  Eigen::Vector3d x_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d xd_ = Eigen::Vector3d::Zero();
  Eigen::Vector3d xdd_ = Eigen::Vector3d::Zero();  // xdd - (d/T^2) u
  Eigen::Vector3d u_ = Eigen::Vector3d::Zero();    // last input
};

struct SlerpResult {
  Eigen::Matrix3d rotation;
  bool geodesic_ambiguous = false;  // relative rotation of exactly pi
};

/// expm(alpha logm(R2 R1^T)) R1. alpha in [0, 1].
SlerpResult slerp(const Eigen::Matrix3d& R1, const Eigen::Matrix3d& R2, double alpha);

/// Constant-angular-velocity interpolation between two fixed endpoint
/// orientations; the interpolation parameter accumulates t_s/T per tick.
class OrientationSampler {
 public:
  OrientationSampler(const Eigen::Matrix3d& R1, const Eigen::Matrix3d& R2, double alpha_per_tick);

  /// Advances one tick and returns the sampled orientation; the accumulated
  /// parameter clamps at 1.
  Eigen::Matrix3d step();

  Eigen::Matrix3d current() const;
  bool finished() const { return s_ >= 1.0; }

 private:
  Eigen::Matrix3d R1_;
  Eigen::Matrix3d R2_;
  double alpha_;
  double s_ = 0.0;
};

enum class TargetMode { Discrete, Streamed };

/// One active point-to-point reach: per-axis min-jerk filters plus slerp.
class ReachSampler {
 public:
  /// Starts a reach from `current` to `target` at Cartesian speed v_t.
  ReachSampler(const Pose& current, const Pose& target, double v_t, double t_s, double t_min);

  /// Pose the end effector should be at on the next tick.
  Pose step();

  const Pose& target() const { return target_; }
  double horizon() const { return filter_.horizon(); }

 private:
  Pose target_;
  MinJerkFilter filter_;
  OrientationSampler orientation_;
};

/// Discrete mode shapes the pose through the reach sampler; streamed mode
/// passes the target through untouched.
Pose sample_next_pose(const Pose& target, TargetMode mode, ReachSampler* reach);

}  // namespace wbmc
