#pragma once

#include <string>

#include <yaml-cpp/yaml.h>

#include "wbmc/controller.hpp"
#include "wbmc/kinematics.hpp"

namespace wbmc {

inline constexpr int kModelFormatVersion = 1;
inline constexpr int kConfigFormatVersion = 1;

/// Loads and validates a robot model file. Throws std::runtime_error with a
/// descriptive message on malformed input.
RobotModel load_model(const std::string& path);
RobotModel parse_model(const YAML::Node& root, const std::string& origin);

/// Rigid transform from {xyz: [...], rpy: [...]} (fixed-axis XYZ angles).
Eigen::Isometry3d parse_transform(const YAML::Node& node);

Eigen::Vector3d parse_vec3(const YAML::Node& node);

/// Loads a controller configuration and validates it against the model.
/// q_home and the limit-shaping thresholds default from the model when the
/// file leaves them out (shaping from the band fractions, see docs/formats.md).
ControllerConfig load_config(const std::string& path, const RobotModel& model);
ControllerConfig parse_config(const YAML::Node& root, const RobotModel& model);

/// Shaping thresholds from band fractions of each joint's position range:
/// the bound fades over [outer, inner] from the limit.
std::vector<JointLimitShaping> default_limit_shaping(const RobotModel& model, double inner,
                                                     double outer);

}  // namespace wbmc
