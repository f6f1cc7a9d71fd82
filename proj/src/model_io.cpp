#include "wbmc/model_io.hpp"

#include <stdexcept>

namespace wbmc {

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
  throw std::runtime_error("model file " + origin + ": " + what);
}

double req_double(const YAML::Node& n, const char* key, const std::string& origin) {
  if (!n[key]) fail(origin, std::string("missing key '") + key + "'");
  return n[key].as<double>();
}

JointDescriptor parse_joint(const YAML::Node& n, const std::string& origin) {
  JointDescriptor j;
  if (!n["name"]) fail(origin, "joint without a name");
  j.name = n["name"].as<std::string>();
  j.a = req_double(n, "a", origin);
  j.d = req_double(n, "d", origin);
  j.alpha = req_double(n, "alpha", origin);
  j.theta_offset = req_double(n, "theta_offset", origin);
  j.q_min = req_double(n, "q_min", origin);
  j.q_max = req_double(n, "q_max", origin);
  j.qd_min = req_double(n, "qd_min", origin);
  j.qd_max = req_double(n, "qd_max", origin);
  return j;
}

BodyPartKind parse_kind(const std::string& s, const std::string& origin) {
  if (s == "torso") return BodyPartKind::Torso;
  if (s == "upper_arm") return BodyPartKind::UpperArm;
  if (s == "forearm") return BodyPartKind::Forearm;
  if (s == "hand") return BodyPartKind::Hand;
  fail(origin, "unknown body part kind '" + s + "'");
}

}  // namespace

Eigen::Vector3d parse_vec3(const YAML::Node& node) {
  if (!node.IsSequence() || node.size() != 3) {
    throw std::runtime_error("expected a 3-element sequence");
  }
  return {node[0].as<double>(), node[1].as<double>(), node[2].as<double>()};
}

Eigen::Isometry3d parse_transform(const YAML::Node& node) {
  Eigen::Isometry3d T = Eigen::Isometry3d::Identity();
  if (!node) return T;
  if (node["xyz"]) T.translation() = parse_vec3(node["xyz"]);
  if (node["rpy"]) {
    const Eigen::Vector3d rpy = parse_vec3(node["rpy"]);
    T.linear() = (Eigen::AngleAxisd(rpy.z(), Eigen::Vector3d::UnitZ()) *
                  Eigen::AngleAxisd(rpy.y(), Eigen::Vector3d::UnitY()) *
                  Eigen::AngleAxisd(rpy.x(), Eigen::Vector3d::UnitX()))
                     .toRotationMatrix();
  }
  if (node["rotation"]) {
    // Row-major 9-element rotation matrix, for calibrated mounts.
    const YAML::Node r = node["rotation"];
    if (!r.IsSequence() || r.size() != 9) throw std::runtime_error("rotation must have 9 entries");
    Eigen::Matrix3d R;
    for (int i = 0; i < 9; ++i) R(i / 3, i % 3) = r[i].as<double>();
    T.linear() = R;
  }
  return T;
}

RobotModel parse_model(const YAML::Node& root, const std::string& origin) {
  RobotModel m;
  if (!root["format_version"]) fail(origin, "missing format_version");
  m.format_version = root["format_version"].as<int>();
  if (m.format_version != kModelFormatVersion) {
    fail(origin, "unsupported format_version " + std::to_string(m.format_version));
  }
  m.name = root["name"] ? root["name"].as<std::string>() : "unnamed";
  m.base_frame = parse_transform(root["base_frame"]);

  const YAML::Node torso = root["torso"];
  if (!torso || !torso["joints"]) fail(origin, "missing torso.joints");
  int idx = 0;
  for (const auto& jn : torso["joints"]) {
    JointDescriptor j = parse_joint(jn, origin);
    j.parent = idx - 1;
    m.joints.push_back(j);
    ++idx;
  }
  m.n_torso = idx;

  const YAML::Node arms = root["arms"];
  if (!arms || !arms["left"] || !arms["right"]) fail(origin, "missing arms.left / arms.right");
  for (const char* side : {"left", "right"}) {
    const YAML::Node arm = arms[side];
    if (!arm["joints"]) fail(origin, std::string("missing arms.") + side + ".joints");
    const Eigen::Isometry3d mount = parse_transform(arm["mount"]);
    int count = 0;
    for (const auto& jn : arm["joints"]) {
      JointDescriptor j = parse_joint(jn, origin);
      j.parent = count == 0 ? m.n_torso - 1 : idx - 1;
      if (count == 0) j.pre = mount;
      m.joints.push_back(j);
      ++idx;
      ++count;
    }
    if (m.n_arm == 0) {
      m.n_arm = count;
    } else if (m.n_arm != count) {
      fail(origin, "left and right arms have different joint counts");
    }
    const Eigen::Isometry3d tool = parse_transform(arm["tool"]);
    (std::string(side) == "left" ? m.left_tool : m.right_tool) = tool;
  }

  auto link_id = [&](const std::string& name) {
    for (int i = 0; i < m.n_joints(); ++i) {
      if (m.joints[i].name == name) return i;
    }
    fail(origin, "unknown link name '" + name + "'");
  };

  if (!root["body_parts"]) fail(origin, "missing body_parts");
  for (const auto& pn : root["body_parts"]) {
    BodyPart p;
    p.name = pn["name"].as<std::string>();
    p.kind = parse_kind(pn["kind"].as<std::string>(), origin);
    if (pn["side"]) {
      const auto s = pn["side"].as<std::string>();
      if (s != "left" && s != "right") fail(origin, "body part side must be left or right");
      p.side = s == "left" ? ArmSide::Left : ArmSide::Right;
    }
    if (!pn["links"]) fail(origin, "body part " + p.name + " without links");
    for (const auto& ln : pn["links"]) p.links.push_back(link_id(ln.as<std::string>()));
    p.k2 = req_double(pn, "k2", origin);
    if (pn["samples"]) {
      for (const auto& sn : pn["samples"]) {
        SurfaceSample s;
        s.link = link_id(sn["link"].as<std::string>());
        s.local = parse_vec3(sn["xyz"]);
        p.samples.push_back(s);
      }
    }
    m.parts.push_back(std::move(p));
  }

  if (root["proximity_sensors"]) {
    for (const auto& sn : root["proximity_sensors"]) {
      ProximitySensor s;
      s.id = sn["id"].as<std::string>();
      s.link = link_id(sn["link"].as<std::string>());
      s.position = parse_vec3(sn["xyz"]);
      s.beam = parse_vec3(sn["beam"]).normalized();
      m.proximity_sensors.push_back(s);
    }
  }

  if (!root["q_home"]) fail(origin, "missing q_home");
  const YAML::Node qh = root["q_home"];
  if (static_cast<int>(qh.size()) != m.n_joints()) fail(origin, "q_home dimension mismatch");
  m.q_home.resize(m.n_joints());
  for (int i = 0; i < m.n_joints(); ++i) m.q_home[i] = qh[i].as<double>();

  m.validate();
  return m;
}

std::vector<JointLimitShaping> default_limit_shaping(const RobotModel& model, double inner,
                                                     double outer) {
  if (!(0.0 <= outer && outer < inner && inner <= 0.5)) {
    throw std::runtime_error("limit shaping bands need 0 <= outer < inner <= 0.5");
  }
  std::vector<JointLimitShaping> shaping;
  shaping.reserve(model.n_joints());
  for (const auto& j : model.joints) {
    const double range = j.q_max - j.q_min;
    JointLimitShaping s;
    s.g_L = j.q_min + outer * range;
    s.g_H = j.q_min + inner * range;
    s.G_L = j.q_max - inner * range;
    s.G_H = j.q_max - outer * range;
    shaping.push_back(s);
  }
  return shaping;
}

ControllerConfig parse_config(const YAML::Node& root, const RobotModel& model) {
  if (!root["format_version"] || root["format_version"].as<int>() != kConfigFormatVersion) {
    throw std::runtime_error("config: missing or unsupported format_version");
  }
  ControllerConfig c;
  const int n = model.n_joints();
  if (root["joint_weights"]) {
    const YAML::Node w = root["joint_weights"];
    if (static_cast<int>(w.size()) != n) throw std::runtime_error("config: joint_weights size");
    c.joint_weights.resize(n);
    for (int i = 0; i < n; ++i) c.joint_weights[i] = w[i].as<double>();
  } else {
    c.joint_weights = Eigen::VectorXd::Constant(n, root["joint_weight"].as<double>(1.0));
  }
  c.slack_weight_pos = root["slack_weight_pos"].as<double>(1.0);
  c.slack_weight_ori = root["slack_weight_ori"].as<double>(1.0);
  c.home_weight = root["home_weight"].as<double>(0.0);
  c.home_horizon = root["home_horizon"].as<double>(1.0);
  c.omega0 = root["omega0"].as<double>(0.05);
  c.t_s = root["t_s"].as<double>(0.01);
  c.v_t = root["v_t"].as<double>(0.1);
  if (root["q_home"]) {
    const YAML::Node qh = root["q_home"];
    if (static_cast<int>(qh.size()) != n) throw std::runtime_error("config: q_home size");
    c.q_home.resize(n);
    for (int i = 0; i < n; ++i) c.q_home[i] = qh[i].as<double>();
  } else {
    c.q_home = model.q_home;
  }
  double inner = 0.1, outer = 0.02;
  if (auto ls = root["limit_shaping"]) {
    inner = ls["inner"].as<double>(inner);
    outer = ls["outer"].as<double>(outer);
  }
  c.limit_shaping = default_limit_shaping(model, inner, outer);
  if (auto av = root["avoidance"]) {
    auto& a = c.avoidance;
    a.k1 = av["k1"].as<double>(a.k1);
    a.pps_range = av["pps_range"].as<double>(a.pps_range);
    a.survival_time = av["survival_time"].as<double>(a.survival_time);
    a.pressure_threshold = av["pressure_threshold"].as<double>(a.pressure_threshold);
    a.max_pressure = av["max_pressure"].as<double>(a.max_pressure);
    a.tactile_cluster_radius = av["tactile_cluster_radius"].as<double>(a.tactile_cluster_radius);
    a.self_collision_threshold =
        av["self_collision_threshold"].as<double>(a.self_collision_threshold);
    a.gain_visual = av["gain_visual"].as<double>(a.gain_visual);
    a.gain_proximity = av["gain_proximity"].as<double>(a.gain_proximity);
    a.gain_tactile = av["gain_tactile"].as<double>(a.gain_tactile);
    a.gain_self = av["gain_self"].as<double>(a.gain_self);
    a.gain_static = av["gain_static"].as<double>(a.gain_static);
  }
  if (auto qp = root["qp"]) {
    c.qp_tol = qp["tol"].as<double>(c.qp_tol);
    c.qp_max_iter = qp["max_iter"].as<int>(c.qp_max_iter);
  }
  c.validate(model);
  return c;
}

ControllerConfig load_config(const std::string& path, const RobotModel& model) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::Exception& e) {
    throw std::runtime_error("cannot load config file " + path + ": " + e.what());
  }
  return parse_config(root, model);
}

RobotModel load_model(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::Exception& e) {
    throw std::runtime_error("cannot load model file " + path + ": " + e.what());
  }
  return parse_model(root, path);
}

}  // namespace wbmc
