#include "wbmc/sim.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

namespace wbmc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::Vector3d parse_vec3(const YAML::Node& n, const char* what) {
  if (!n || !n.IsSequence() || n.size() != 3) {
    throw std::runtime_error(std::string("scenario: expected 3-vector for ") + what);
  }
  return {n[0].as<double>(), n[1].as<double>(), n[2].as<double>()};
}

/// Orientations are stored as [axis_x, axis_y, axis_z, angle].
Eigen::Vector3d parse_orientation(const YAML::Node& n, const char* what) {
  if (!n || !n.IsSequence() || n.size() != 4) {
    throw std::runtime_error(std::string("scenario: expected [axis, angle] for ") + what);
  }
  Eigen::Vector3d axis(n[0].as<double>(), n[1].as<double>(), n[2].as<double>());
  const double len = axis.norm();
  if (len < 1e-12) throw std::runtime_error(std::string("scenario: zero axis in ") + what);
  return canonical_axis_angle(axis / len * n[3].as<double>());
}

Pose parse_pose(const YAML::Node& n, const char* what) {
  Pose p;
  p.position = parse_vec3(n["position"], what);
  p.orientation = parse_orientation(n["orientation"], what);
  return p;
}

YAML::Node emit_vec3(const Eigen::Vector3d& v) {
  YAML::Node n(YAML::NodeType::Sequence);
  n.SetStyle(YAML::EmitterStyle::Flow);
  for (int i = 0; i < 3; ++i) n.push_back(v[i]);
  return n;
}

YAML::Node emit_orientation(const Eigen::Vector3d& r) {
  const double angle = r.norm();
  const Eigen::Vector3d axis = angle < 1e-12 ? Eigen::Vector3d::UnitX() : (r / angle).eval();
  YAML::Node n(YAML::NodeType::Sequence);
  n.SetStyle(YAML::EmitterStyle::Flow);
  for (int i = 0; i < 3; ++i) n.push_back(axis[i]);
  n.push_back(angle);
  return n;
}

YAML::Node emit_pose(const Pose& p) {
  YAML::Node n;
  n["position"] = emit_vec3(p.position);
  n["orientation"] = emit_orientation(p.orientation);
  return n;
}

}  // namespace

Pose CircleStream::primary_pose(double t) const {
  const double phi = 2.0 * std::numbers::pi * t / period;
  Pose p;
  p.position = center_primary + radius * (std::cos(phi) * axis_u + std::sin(phi) * axis_v);
  p.orientation = orientation_primary;
  return p;
}

Pose CircleStream::secondary_pose(double t) const {
  double phi = 2.0 * std::numbers::pi * t / period;
  // Opposite direction, phase pi: the hands stay on opposite sides.
  phi = counter_rotating ? std::numbers::pi - phi : std::numbers::pi + phi;
  Pose p;
  p.position = center_secondary + radius * (std::cos(phi) * axis_u + std::sin(phi) * axis_v);
  p.orientation = orientation_secondary;
  return p;
}

void Scenario::validate() const {
  if (target_timeout <= 0.0) throw std::runtime_error("scenario: target_timeout must be > 0");
  if (stream) {
    if (stream->period <= 0.0 || stream->radius <= 0.0) {
      throw std::runtime_error("scenario: stream needs positive radius and period");
    }
    if (duration <= 0.0) throw std::runtime_error("scenario: streamed reference needs a duration");
    if (!targets_primary.empty() || !targets_secondary.empty()) {
      throw std::runtime_error("scenario: stream and discrete targets are exclusive");
    }
  } else if (targets_primary.empty() && targets_secondary.empty() && duration <= 0.0) {
    throw std::runtime_error("scenario: nothing to do (no targets, stream or duration)");
  }
  if (mode == ControlMode::Single && !targets_secondary.empty()) {
    throw std::runtime_error("scenario: secondary targets in single mode");
  }
  if (mode == ControlMode::Single && relative_position) {
    throw std::runtime_error("scenario: relative_position needs dual mode");
  }
  for (const auto& o : obstacles) {
    if (o.stop < o.start) throw std::runtime_error("scenario: obstacle stop before start");
  }
}

Scenario load_scenario(const std::string& path) {
  YAML::Node root = YAML::LoadFile(path);
  if (root["format_version"].as<int>(-1) != kScenarioFormatVersion) {
    throw std::runtime_error("scenario: unsupported format_version in " + path);
  }
  Scenario s;
  s.name = root["name"].as<std::string>("");
  const std::string mode = root["mode"].as<std::string>("single");
  if (mode == "single") {
    s.mode = ControlMode::Single;
  } else if (mode == "dual") {
    s.mode = ControlMode::Dual;
  } else {
    throw std::runtime_error("scenario: mode must be single or dual");
  }
  const std::string arm = root["primary_arm"].as<std::string>("left");
  if (arm == "left") {
    s.primary_arm = ArmSide::Left;
  } else if (arm == "right") {
    s.primary_arm = ArmSide::Right;
  } else {
    throw std::runtime_error("scenario: primary_arm must be left or right");
  }
  s.duration = root["duration"].as<double>(0.0);
  s.target_timeout = root["target_timeout"].as<double>(10.0);
  if (auto targets = root["targets"]) {
    for (const auto& t : targets["primary"]) s.targets_primary.push_back(parse_pose(t, "target"));
    for (const auto& t : targets["secondary"]) {
      s.targets_secondary.push_back(parse_pose(t, "target"));
    }
  }
  if (auto st = root["stream"]) {
    CircleStream c;
    c.center_primary = parse_vec3(st["center_primary"], "stream center");
    c.orientation_primary = parse_orientation(st["orientation_primary"], "stream orientation");
    if (st["center_secondary"]) {
      c.center_secondary = parse_vec3(st["center_secondary"], "stream center");
      c.orientation_secondary =
          parse_orientation(st["orientation_secondary"], "stream orientation");
    }
    if (st["axis_u"]) c.axis_u = parse_vec3(st["axis_u"], "stream axis").normalized();
    if (st["axis_v"]) c.axis_v = parse_vec3(st["axis_v"], "stream axis").normalized();
    c.radius = st["radius"].as<double>();
    c.period = st["period"].as<double>();
    c.counter_rotating = st["counter_rotating"].as<bool>(true);
    s.stream = c;
  }
  for (const auto& on : root["obstacles"]) {
    ScriptedObstacle o;
    o.position = parse_vec3(on["position"], "obstacle position");
    o.velocity = parse_vec3(on["velocity"], "obstacle velocity");
    const std::string kind = on["kind"].as<std::string>("body");
    if (kind == "hand") o.kind = VisualKeypoint::Kind::Hand;
    o.start = on["start"].as<double>(0.0);
    if (on["stop"]) o.stop = on["stop"].as<double>();
    s.obstacles.push_back(o);
  }
  for (const auto& p : root["static_obstacles"]) {
    s.static_obstacles.push_back(parse_vec3(p, "static obstacle"));
  }
  if (root["relative_position"]) {
    s.relative_position = parse_vec3(root["relative_position"], "relative_position");
  }
  if (auto q0 = root["q0"]) {
    Eigen::VectorXd q(q0.size());
    for (size_t i = 0; i < q0.size(); ++i) q[i] = q0[i].as<double>();
    s.q0 = q;
  }
  s.validate();
  return s;
}

void save_scenario(const Scenario& scenario, const std::string& path) {
  scenario.validate();
  YAML::Node root;
  root["format_version"] = kScenarioFormatVersion;
  root["name"] = scenario.name;
  root["mode"] = scenario.mode == ControlMode::Single ? "single" : "dual";
  root["primary_arm"] = to_string(scenario.primary_arm);
  root["duration"] = scenario.duration;
  root["target_timeout"] = scenario.target_timeout;
  if (!scenario.targets_primary.empty() || !scenario.targets_secondary.empty()) {
    YAML::Node targets;
    for (const auto& p : scenario.targets_primary) targets["primary"].push_back(emit_pose(p));
    for (const auto& p : scenario.targets_secondary) targets["secondary"].push_back(emit_pose(p));
    root["targets"] = targets;
  }
  if (scenario.stream) {
    const CircleStream& c = *scenario.stream;
    YAML::Node st;
    st["center_primary"] = emit_vec3(c.center_primary);
    st["orientation_primary"] = emit_orientation(c.orientation_primary);
    if (c.center_secondary != Eigen::Vector3d::Zero() || scenario.mode == ControlMode::Dual) {
      st["center_secondary"] = emit_vec3(c.center_secondary);
      st["orientation_secondary"] = emit_orientation(c.orientation_secondary);
    }
    st["axis_u"] = emit_vec3(c.axis_u);
    st["axis_v"] = emit_vec3(c.axis_v);
    st["radius"] = c.radius;
    st["period"] = c.period;
    st["counter_rotating"] = c.counter_rotating;
    root["stream"] = st;
  }
  for (const auto& o : scenario.obstacles) {
    YAML::Node on;
    on["position"] = emit_vec3(o.position);
    on["velocity"] = emit_vec3(o.velocity);
    on["kind"] = o.kind == VisualKeypoint::Kind::Hand ? "hand" : "body";
    on["start"] = o.start;
    if (std::isfinite(o.stop)) on["stop"] = o.stop;
    root["obstacles"].push_back(on);
  }
  for (const auto& p : scenario.static_obstacles) root["static_obstacles"].push_back(emit_vec3(p));
  if (scenario.relative_position) {
    root["relative_position"] = emit_vec3(*scenario.relative_position);
  }
  if (scenario.q0) {
    YAML::Node q(YAML::NodeType::Sequence);
    q.SetStyle(YAML::EmitterStyle::Flow);
    for (int i = 0; i < scenario.q0->size(); ++i) q.push_back((*scenario.q0)[i]);
    root["q0"] = q;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scenario file " + path);
  out << root << "\n";
}

void write_metrics_header(std::ostream& os) {
  os << "tick,time,status,fallback,frozen,limit_clamped,iterations,kkt,mu,collision_rows,"
        "qd_norm,target_primary,target_secondary,err_pos_primary,err_ori_primary,"
        "err_pos_secondary,err_ori_secondary,obstacle_distance,inter_arm_distance\n";
}

namespace {

/// Shortest-repr formatting keeps the CSV bit-reproducible across runs.
void put(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

}  // namespace

void write_metrics_row(std::ostream& os, const TickMetrics& m) {
  os << m.tick << ',';
  put(os, m.time);
  os << ',' << m.status << ',' << m.fallback << ',' << m.frozen << ',' << m.limit_clamped << ','
     << m.iterations << ',';
  put(os, m.kkt);
  os << ',';
  put(os, m.mu);
  os << ',' << m.collision_rows << ',';
  put(os, m.qd_norm);
  os << ',' << m.target_primary << ',' << m.target_secondary << ',';
  put(os, m.err_pos_primary);
  os << ',';
  put(os, m.err_ori_primary);
  os << ',';
  put(os, m.err_pos_secondary);
  os << ',';
  put(os, m.err_ori_secondary);
  os << ',';
  put(os, m.obstacle_distance);
  os << ',';
  put(os, m.inter_arm_distance);
  os << '\n';
}

namespace {

/// Per-arm discrete-target progression.
struct TargetTracker {
  const std::vector<Pose>* targets = nullptr;
  int index = -1;          // active target, -1 before activation/after the last
  int next = 0;            // next target to activate
  long activated_tick = 0;
  std::vector<TargetOutcome> outcomes;

  bool exhausted() const { return index < 0 && targets && next >= (int)targets->size(); }
  const Pose* active() const { return index >= 0 ? &(*targets)[index] : nullptr; }
  const Pose* reference() const {
    if (index >= 0) return &(*targets)[index];
    if (targets && next > 0) return &(*targets)[next - 1];  // hold the last one
    return nullptr;
  }

  std::optional<ArmTarget> poll(long tick) {
    if (index >= 0 || !targets || next >= (int)targets->size()) return std::nullopt;
    index = next++;
    activated_tick = tick;
    return ArmTarget{(*targets)[index], TargetMode::Discrete, true};
  }

  void update(long tick, double t_s, double pos_err, double ori_err, double pos_tol,
              double ori_tol, double timeout) {
    if (index < 0) return;
    const double elapsed = (tick + 1 - activated_tick) * t_s;
    const bool reached = pos_err < pos_tol && ori_err < ori_tol;
    if (reached || elapsed >= timeout) {
      outcomes.push_back({index, reached, elapsed, pos_err, ori_err});
      index = -1;
    }
  }
};

double min_sample_distance(const std::vector<const BodyPart*>& parts,
                           const std::vector<Eigen::Isometry3d>& T,
                           const std::vector<Eigen::Vector3d>& points) {
  double best = kInf;
  for (const BodyPart* part : parts) {
    for (const auto& s : part->samples) {
      const Eigen::Vector3d pw = T[s.link] * s.local;
      for (const auto& p : points) best = std::min(best, (p - pw).norm());
    }
  }
  return best;
}

double arm_pair_distance(const RobotModel& model, const std::vector<Eigen::Isometry3d>& T) {
  double best = kInf;
  std::vector<Eigen::Vector3d> right;
  for (BodyPartKind kind : {BodyPartKind::Hand, BodyPartKind::Forearm}) {
    for (const auto& s : model.part(kind, ArmSide::Right).samples) {
      right.push_back(T[s.link] * s.local);
    }
  }
  for (BodyPartKind kind : {BodyPartKind::Hand, BodyPartKind::Forearm}) {
    for (const auto& s : model.part(kind, ArmSide::Left).samples) {
      const Eigen::Vector3d pw = T[s.link] * s.local;
      for (const auto& p : right) best = std::min(best, (p - pw).norm());
    }
  }
  return best;
}

}  // namespace

RunResult run_scenario(const RobotModel& model, const ControllerConfig& config,
                       const Scenario& scenario, const RunOptions& options) {
  scenario.validate();
  ControllerConfig cfg = config;
  cfg.mode = scenario.mode;
  cfg.primary_arm = scenario.primary_arm;
  Controller controller(model, cfg);
  if (options.qp_dump != nullptr) controller.set_dump_stream(options.qp_dump);
  ControlState state = controller.make_state(scenario.q0 ? *scenario.q0 : model.q_home);

  const double t_s = cfg.t_s;
  const ArmSide primary = scenario.primary_arm;
  const ArmSide secondary = other_arm(primary);
  const bool dual = scenario.mode == ControlMode::Dual;

  TargetTracker track_p, track_s;
  track_p.targets = &scenario.targets_primary;
  track_s.targets = &scenario.targets_secondary;

  long max_ticks = options.max_ticks;
  if (max_ticks <= 0) {
    if (scenario.duration > 0.0) {
      max_ticks = static_cast<long>(std::ceil(scenario.duration / t_s));
    } else {
      const size_t n = std::max(scenario.targets_primary.size(),
                                scenario.targets_secondary.size());
      max_ticks = static_cast<long>(std::ceil(n * scenario.target_timeout / t_s)) + 1;
    }
  }

  std::vector<const BodyPart*> watched_parts;
  for (const auto& p : model.parts) {
    if (!p.side || dual || *p.side == primary) watched_parts.push_back(&p);
  }

  RunResult result;
  if (options.csv != nullptr) write_metrics_header(*options.csv);

  for (long tick = 0; tick < max_ticks; ++tick) {
    const double t = tick * t_s;

    std::optional<ArmTarget> cmd_p, cmd_s;
    if (scenario.stream) {
      cmd_p = ArmTarget{scenario.stream->primary_pose(t), TargetMode::Streamed, false};
      if (dual) cmd_s = ArmTarget{scenario.stream->secondary_pose(t), TargetMode::Streamed, false};
    } else {
      cmd_p = track_p.poll(tick);
      if (dual) cmd_s = track_s.poll(tick);
      if (!scenario.targets_primary.empty() || !scenario.targets_secondary.empty()) {
        if (track_p.exhausted() && (!dual || track_s.exhausted()) && scenario.duration <= 0.0 &&
            !cmd_p && !cmd_s && track_p.index < 0 && track_s.index < 0) {
          break;
        }
      }
    }

    std::vector<SensorEvent> events;
    std::vector<Eigen::Vector3d> obstacle_points;
    for (const auto& o : scenario.obstacles) {
      if (!o.active(t)) continue;
      const Eigen::Vector3d p = o.position_at(t);
      events.push_back(VisualKeypoint{p, o.kind});
      obstacle_points.push_back(p);
    }
    for (const auto& p : scenario.static_obstacles) obstacle_points.push_back(p);

    const StepResult step = controller.control_step(state, cmd_p, cmd_s, std::move(events),
                                                    scenario.static_obstacles,
                                                    scenario.relative_position);

    TickMetrics m;
    m.tick = tick;
    m.time = t;
    m.status = static_cast<int>(step.diagnostics.status);
    m.fallback = step.diagnostics.fallback_used ? 1 : 0;
    m.frozen = step.diagnostics.frozen ? 1 : 0;
    m.limit_clamped = step.diagnostics.limit_clamped ? 1 : 0;
    m.iterations = step.diagnostics.iterations;
    m.kkt = step.diagnostics.kkt_residual;
    m.mu = step.diagnostics.mu;
    m.collision_rows = step.diagnostics.collision_rows;
    m.qd_norm = step.qd.norm();
    m.target_primary = track_p.index;
    m.target_secondary = track_s.index;

    const Pose pose_p = forward_kinematics_pose(model, state.q, model.ee_frame(primary));
    const Pose* ref_p = nullptr;
    Pose stream_p, stream_s;
    if (scenario.stream) {
      stream_p = scenario.stream->primary_pose(t);
      ref_p = &stream_p;
    } else {
      ref_p = track_p.reference();
    }
    if (ref_p != nullptr) {
      m.err_pos_primary = (pose_p.position - ref_p->position).norm();
      m.err_ori_primary = geodesic_angle(pose_p.rotation(), ref_p->rotation());
    }
    m.err_pos_secondary = kNaN;
    m.err_ori_secondary = kNaN;
    m.inter_arm_distance = kNaN;
    const auto T = all_link_transforms(model, state.q);
    if (dual) {
      const Pose pose_s = forward_kinematics_pose(model, state.q, model.ee_frame(secondary));
      const Pose* ref_s = nullptr;
      if (scenario.stream) {
        stream_s = scenario.stream->secondary_pose(t);
        ref_s = &stream_s;
      } else {
        ref_s = track_s.reference();
      }
      if (ref_s != nullptr) {
        m.err_pos_secondary = (pose_s.position - ref_s->position).norm();
        m.err_ori_secondary = geodesic_angle(pose_s.rotation(), ref_s->rotation());
      }
      m.inter_arm_distance = arm_pair_distance(model, T);
      result.min_inter_arm_distance = std::min(result.min_inter_arm_distance,
                                               m.inter_arm_distance);
    }
    m.obstacle_distance = obstacle_points.empty()
                              ? kInf
                              : min_sample_distance(watched_parts, T, obstacle_points);
    result.min_obstacle_distance = std::min(result.min_obstacle_distance, m.obstacle_distance);

    if (!scenario.stream) {
      track_p.update(tick, t_s, m.err_pos_primary, m.err_ori_primary, options.reach_pos_tol,
                     options.reach_ori_tol, scenario.target_timeout);
      if (dual) {
        track_s.update(tick, t_s, m.err_pos_secondary, m.err_ori_secondary,
                       options.reach_pos_tol, options.reach_ori_tol, scenario.target_timeout);
      }
    }

    if (step.diagnostics.status != QpStatus::Optimal) ++result.solver_failures;
    if (step.diagnostics.fallback_used) ++result.fallback_ticks;
    if (step.diagnostics.frozen) ++result.frozen_ticks;
    ++result.total_ticks;
    if (options.csv != nullptr) write_metrics_row(*options.csv, m);
  }

  result.targets_primary = std::move(track_p.outcomes);
  result.targets_secondary = std::move(track_s.outcomes);
  result.q_final = state.q;
  return result;
}

namespace {

void summarize_targets(std::ostream& os, const char* label,
                       const std::vector<TargetOutcome>& outcomes) {
  if (outcomes.empty()) return;
  int reached = 0;
  for (const auto& o : outcomes) reached += o.reached ? 1 : 0;
  os << label << " targets: " << reached << "/" << outcomes.size() << " reached\n";
  for (const auto& o : outcomes) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "  target %d: %s  t=%.2fs  pos_err=%.4fm  ori_err=%.4frad\n", o.index,
                  o.reached ? "reached" : "missed ", o.time_to_reach, o.final_pos_error,
                  o.final_ori_error);
    os << buf;
  }
}

}  // namespace

void write_summary(std::ostream& os, const Scenario& scenario, const RunResult& result) {
  os << "scenario: " << scenario.name << "\n";
  os << "mode: " << (scenario.mode == ControlMode::Single ? "single" : "dual") << " ("
     << to_string(scenario.primary_arm) << " primary)\n";
  os << "ticks: " << result.total_ticks << "\n";
  os << "solver failures: " << result.solver_failures << "\n";
  os << "fallback ticks: " << result.fallback_ticks << "\n";
  os << "frozen ticks: " << result.frozen_ticks << "\n";
  char buf[96];
  if (std::isfinite(result.min_obstacle_distance)) {
    std::snprintf(buf, sizeof buf, "min obstacle distance: %.4f m\n",
                  result.min_obstacle_distance);
    os << buf;
  }
  if (std::isfinite(result.min_inter_arm_distance)) {
    std::snprintf(buf, sizeof buf, "min inter-arm distance: %.4f m\n",
                  result.min_inter_arm_distance);
    os << buf;
  }
  summarize_targets(os, "primary", result.targets_primary);
  summarize_targets(os, "secondary", result.targets_secondary);
}

namespace {

Pose home_ee_pose(const RobotModel& model, ArmSide arm) {
  return forward_kinematics_pose(model, model.q_home, model.ee_frame(arm));
}

/// Published grid/pose constants; generators recenter them into the bundled
/// model's workspace around the home end-effector position.
const Eigen::Vector3d kGridCenter(-0.19, 0.15, 0.12);
const Eigen::Vector3d kPairMidpoint(-0.245, 0.145, 0.025);

Eigen::Vector3d left_orientation() {
  return canonical_axis_angle(Eigen::Vector3d(-0.15, -0.79, 0.59).normalized() * 3.06);
}

Eigen::Vector3d right_orientation() {
  return canonical_axis_angle(Eigen::Vector3d(-0.11, 0.99, 0.01).normalized() * 3.14);
}

Eigen::Vector3d arm_orientation(ArmSide arm) {
  return arm == ArmSide::Left ? left_orientation() : right_orientation();
}

}  // namespace

Scenario make_reachability_grid(const RobotModel& model, ArmSide arm, unsigned seed) {
  Scenario s;
  s.name = "exp1-reachability-" + std::string(to_string(arm));
  s.mode = ControlMode::Single;
  s.primary_arm = arm;
  s.target_timeout = 10.0;

  const Eigen::Vector3d offset = home_ee_pose(model, arm).position - kGridCenter;
  const Eigen::Vector3d orientation = arm_orientation(arm);
  const double xs[] = {-0.23, -0.19, -0.15};
  const double ys[] = {0.11, 0.15, 0.19};
  const double zs[] = {0.08, 0.12, 0.16};
  for (double x : xs) {
    for (double y : ys) {
      for (double z : zs) {
        s.targets_primary.push_back({Eigen::Vector3d(x, y, z) + offset, orientation});
      }
    }
  }
  // Fisher-Yates with the raw generator output keeps the order reproducible
  // across standard libraries.
  std::mt19937 rng(seed);
  for (size_t i = s.targets_primary.size() - 1; i > 0; --i) {
    std::swap(s.targets_primary[i], s.targets_primary[rng() % (i + 1)]);
  }
  return s;
}

Scenario make_pose_pair(const RobotModel& model, ArmSide arm, int repetitions) {
  Scenario s;
  s.name = "exp2-pose-pair-" + std::string(to_string(arm));
  s.mode = ControlMode::Single;
  s.primary_arm = arm;
  s.target_timeout = 10.0;
  const Eigen::Vector3d offset = home_ee_pose(model, arm).position - kPairMidpoint;
  const Pose p1{Eigen::Vector3d(-0.23, 0.26, 0.02) + offset, left_orientation()};
  const Pose p2{Eigen::Vector3d(-0.26, 0.03, 0.03) + offset, right_orientation()};
  for (int i = 0; i < repetitions; ++i) {
    s.targets_primary.push_back(p1);
    s.targets_primary.push_back(p2);
  }
  return s;
}

Scenario make_circle(const RobotModel& model, ArmSide arm, double duration) {
  Scenario s;
  s.name = "exp3-circle-" + std::string(to_string(arm));
  s.mode = ControlMode::Single;
  s.primary_arm = arm;
  s.duration = duration;
  const Pose home = home_ee_pose(model, arm);
  CircleStream c;
  c.center_primary = home.position;
  c.orientation_primary = home.orientation;
  c.radius = 0.08;
  c.period = 8.0;
  s.stream = c;
  return s;
}

Scenario make_dual_circles(const RobotModel& model, ArmSide primary, double duration) {
  Scenario s;
  s.name = "exp4-dual-circles";
  s.mode = ControlMode::Dual;
  s.primary_arm = primary;
  s.duration = duration;
  const Pose home_p = home_ee_pose(model, primary);
  const Pose home_s = home_ee_pose(model, other_arm(primary));
  // Pull the circles toward each other until the closest reference approach
  // falls inside the self-collision band: the secondary arm has to yield to
  // its avoidance constraints while the primary keeps tracking.
  const Eigen::Vector3d toward = (home_s.position - home_p.position).normalized();
  CircleStream c;
  c.center_primary = home_p.position + 0.045 * toward;
  c.orientation_primary = home_p.orientation;
  c.center_secondary = home_s.position - 0.045 * toward;
  c.orientation_secondary = home_s.orientation;
  c.radius = 0.1;
  c.period = 8.0;
  c.counter_rotating = true;
  s.stream = c;
  return s;
}

Scenario make_moving_obstacle(const RobotModel& model, ArmSide arm, int variant) {
  if (variant < 1 || variant > 3) throw std::invalid_argument("obstacle variant must be 1..3");
  Scenario s;
  s.name = "exp5-moving-obstacle-" + std::to_string(variant);
  s.mode = ControlMode::Single;
  s.primary_arm = arm;
  s.duration = 30.0;
  s.target_timeout = 10.0;
  const Pose home = home_ee_pose(model, arm);
  Pose target = home;
  target.position += Eigen::Vector3d(0.0, 0.0, 0.05);
  s.targets_primary.push_back(target);

  const Eigen::Vector3d velocities[] = {{0.0, -0.05, 0.0}, {0.05, 0.0, 0.0}, {0.0, 0.0, -0.05}};
  const Eigen::Vector3d v = velocities[variant - 1];
  ScriptedObstacle o;
  o.velocity = v;
  // Starts outside the protective range, crosses the target point and
  // disappears shortly after: a flyby, not a chase into the torso.
  o.position = target.position - v.normalized() * 0.55;
  o.start = 0.0;
  o.stop = (0.55 - 0.05) / v.norm();
  o.kind = VisualKeypoint::Kind::Body;
  s.obstacles.push_back(o);
  return s;
}

Scenario make_experiment(const RobotModel& model, const std::string& id, unsigned seed) {
  if (id == "1") return make_reachability_grid(model, ArmSide::Left, seed);
  if (id == "2") return make_pose_pair(model, ArmSide::Left, 5);
  if (id == "3") return make_circle(model, ArmSide::Left, 32.0);
  if (id == "4") return make_dual_circles(model, ArmSide::Left, 32.0);
  if (id == "5-1") return make_moving_obstacle(model, ArmSide::Left, 1);
  if (id == "5-2") return make_moving_obstacle(model, ArmSide::Left, 2);
  if (id == "5-3") return make_moving_obstacle(model, ArmSide::Left, 3);
  throw std::invalid_argument("unknown experiment id '" + id + "'");
}

}  // namespace wbmc
