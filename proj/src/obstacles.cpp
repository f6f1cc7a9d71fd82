#include "wbmc/obstacles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wbmc {

const char* to_string(ObstacleSource s) {
  switch (s) {
    case ObstacleSource::Visual: return "visual";
    case ObstacleSource::Proximity: return "proximity";
    case ObstacleSource::Tactile: return "tactile";
    case ObstacleSource::SelfCollision: return "self";
    case ObstacleSource::Static: return "static";
  }
  return "?";
}

void SensorEventQueue::push(SensorEvent event) {
  std::lock_guard lock(mutex_);
  events_.push_back(std::move(event));
}

std::vector<SensorEvent> SensorEventQueue::drain() {
  std::lock_guard lock(mutex_);
  std::vector<SensorEvent> out(events_.begin(), events_.end());
  events_.clear();
  return out;
}

double proximity_threat(double distance) {
  return std::clamp(1.0 - 50.0 * distance / 3.0, 0.0, 1.0);
}

namespace {

Eigen::Vector3d safe_direction(const Eigen::Vector3d& from, const Eigen::Vector3d& to) {
  const Eigen::Vector3d v = to - from;
  const double n = v.norm();
  if (n < 1e-12) return Eigen::Vector3d::UnitX();  // coincident points, direction arbitrary
  return v / n;
}

}  // namespace

std::vector<CollisionPoint> project_visual(const std::vector<VisualKeypoint>& keypoints,
                                           const RobotModel& model, const Eigen::VectorXd& q,
                                           const AvoidanceParams& params,
                                           const std::vector<const BodyPart*>& parts) {
  std::vector<CollisionPoint> out;
  if (keypoints.empty()) return out;
  const auto T = all_link_transforms(model, q);
  for (const BodyPart* part : parts) {
    double best = std::numeric_limits<double>::infinity();
    const SurfaceSample* best_sample = nullptr;
    Eigen::Vector3d best_sample_world = Eigen::Vector3d::Zero();
    const VisualKeypoint* best_keypoint = nullptr;
    for (const auto& s : part->samples) {
      const Eigen::Vector3d pw = T[s.link] * s.local;
      for (const auto& kp : keypoints) {
        const double d = (kp.position - pw).norm();
        if (d < best) {
          best = d;
          best_sample = &s;
          best_sample_world = pw;
          best_keypoint = &kp;
        }
      }
    }
    if (best_sample == nullptr || best > params.pps_range) continue;
    CollisionPoint cp;
    cp.link = best_sample->link;
    cp.local = best_sample->local;
    cp.direction = safe_direction(best_sample_world, best_keypoint->position);
    cp.threat = 1.0 - best / params.pps_range;
    cp.gain = params.gain_visual;
    cp.source = ObstacleSource::Visual;
    cp.key = part->name;
    out.push_back(std::move(cp));
  }
  return out;
}

std::vector<CollisionPoint> project_proximity(const std::vector<ProximityReading>& readings,
                                              const RobotModel& model, const Eigen::VectorXd& q,
                                              const AvoidanceParams& params) {
  std::vector<CollisionPoint> out;
  const auto T = all_link_transforms(model, q);
  for (const auto& r : readings) {
    const ProximitySensor& sensor = model.proximity_sensor(r.sensor_id);  // throws on unknown id
    if (r.distance < 0.0) throw std::invalid_argument("proximity distance must be >= 0");
    if (r.distance >= params.pps_range) continue;
    CollisionPoint cp;
    cp.link = sensor.link;
    cp.local = sensor.position;
    cp.direction = T[sensor.link].rotation() * sensor.beam;
    cp.threat = 1.0 - r.distance / params.pps_range;
    cp.gain = params.gain_proximity;
    cp.source = ObstacleSource::Proximity;
    cp.key = sensor.id;
    out.push_back(std::move(cp));
  }
  return out;
}

std::vector<CollisionPoint> cluster_tactile(const std::vector<TactileContact>& contacts,
                                            const RobotModel& model, const Eigen::VectorXd& q,
                                            const AvoidanceParams& params) {
  std::vector<CollisionPoint> out;
  std::vector<TactileContact> pool;
  for (const auto& c : contacts) {
    if (c.pressure < 0.0) throw std::invalid_argument("tactile pressure must be >= 0");
    if (c.pressure / params.max_pressure >= params.pressure_threshold) pool.push_back(c);
  }
  if (pool.empty()) return out;
  const auto T = all_link_transforms(model, q);
  // Greedy clustering: seed with the strongest remaining contact, absorb all
  // contacts on the same link within the cluster radius.
  std::vector<bool> used(pool.size(), false);
  while (true) {
    int seed = -1;
    for (size_t i = 0; i < pool.size(); ++i) {
      if (used[i]) continue;
      if (seed < 0 || pool[i].pressure > pool[seed].pressure) seed = static_cast<int>(i);
    }
    if (seed < 0) break;
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    int count = 0;
    for (size_t i = 0; i < pool.size(); ++i) {
      if (used[i] || pool[i].link != pool[seed].link) continue;
      if ((pool[i].position - pool[seed].position).norm() <= params.tactile_cluster_radius) {
        centroid += pool[i].position;
        used[i] = true;
        ++count;
      }
    }
    centroid /= static_cast<double>(count);
    CollisionPoint cp;
    cp.link = pool[seed].link;
    cp.local = centroid;
    cp.direction = T[pool[seed].link].rotation() * pool[seed].normal.normalized();
    cp.threat = std::clamp(pool[seed].pressure / params.max_pressure, 0.0, 1.0);
    cp.gain = params.gain_tactile;
    cp.source = ObstacleSource::Tactile;
    cp.key = std::to_string(pool[seed].link) + "/" + std::to_string(pool[seed].taxel_id);
    out.push_back(std::move(cp));
  }
  return out;
}

namespace {

struct ClosestPair {
  double distance = std::numeric_limits<double>::infinity();
  const SurfaceSample* projected = nullptr;
  Eigen::Vector3d projected_world = Eigen::Vector3d::Zero();
  Eigen::Vector3d obstacle_world = Eigen::Vector3d::Zero();
};

ClosestPair closest_sample_pair(const BodyPart& projected,
                                const std::vector<Eigen::Isometry3d>& T,
                                const std::vector<Eigen::Vector3d>& obstacle_world) {
  ClosestPair best;
  for (const auto& s : projected.samples) {
    const Eigen::Vector3d pw = T[s.link] * s.local;
    for (const auto& ow : obstacle_world) {
      const double d = (ow - pw).norm();
      if (d < best.distance) {  // strict: ties resolve to the lowest index
        best.distance = d;
        best.projected = &s;
        best.projected_world = pw;
        best.obstacle_world = ow;
      }
    }
  }
  return best;
}

CollisionPoint make_pair_point(const ClosestPair& pair, ObstacleSource source, double gain,
                               const std::string& key) {
  CollisionPoint cp;
  cp.link = pair.projected->link;
  cp.local = pair.projected->local;
  cp.direction = safe_direction(pair.projected_world, pair.obstacle_world);
  cp.threat = proximity_threat(pair.distance);
  cp.gain = gain;
  cp.source = source;
  cp.key = key;
  return cp;
}

}  // namespace

std::vector<CollisionPoint> self_collision_points(const RobotModel& model,
                                                  const Eigen::VectorXd& q,
                                                  const AvoidanceParams& params, ControlMode mode,
                                                  ArmSide primary_arm) {
  const auto T = all_link_transforms(model, q);
  std::vector<const BodyPart*> projected;
  std::vector<const BodyPart*> obstacles;
  obstacles.push_back(&model.part(BodyPartKind::Torso, std::nullopt));
  if (mode == ControlMode::Single) {
    projected.push_back(&model.part(BodyPartKind::Hand, primary_arm));
    projected.push_back(&model.part(BodyPartKind::Forearm, primary_arm));
  } else {
    // Only the secondary arm avoids the primary one, not vice versa.
    const ArmSide secondary = other_arm(primary_arm);
    projected.push_back(&model.part(BodyPartKind::Hand, secondary));
    projected.push_back(&model.part(BodyPartKind::Forearm, secondary));
    obstacles.push_back(&model.part(BodyPartKind::Hand, primary_arm));
    obstacles.push_back(&model.part(BodyPartKind::Forearm, primary_arm));
    obstacles.push_back(&model.part(BodyPartKind::UpperArm, primary_arm));
  }
  std::vector<CollisionPoint> out;
  for (const BodyPart* proj : projected) {
    for (const BodyPart* obs : obstacles) {
      std::vector<Eigen::Vector3d> obstacle_world;
      obstacle_world.reserve(obs->samples.size());
      for (const auto& s : obs->samples) obstacle_world.push_back(T[s.link] * s.local);
      const ClosestPair pair = closest_sample_pair(*proj, T, obstacle_world);
      if (pair.projected == nullptr || pair.distance >= params.self_collision_threshold) continue;
      out.push_back(make_pair_point(pair, ObstacleSource::SelfCollision, params.gain_self,
                                    proj->name + "/" + obs->name));
    }
  }
  return out;
}

std::vector<CollisionPoint> static_obstacle_points(
    const std::vector<Eigen::Vector3d>& static_samples, const RobotModel& model,
    const Eigen::VectorXd& q, const AvoidanceParams& params,
    const std::vector<const BodyPart*>& projected_parts) {
  std::vector<CollisionPoint> out;
  if (static_samples.empty()) return out;
  const auto T = all_link_transforms(model, q);
  for (const BodyPart* proj : projected_parts) {
    const ClosestPair pair = closest_sample_pair(*proj, T, static_samples);
    if (pair.projected == nullptr || pair.distance >= params.self_collision_threshold) continue;
    out.push_back(make_pair_point(pair, ObstacleSource::Static, params.gain_static,
                                  proj->name));
  }
  return out;
}

void CollisionSet::refresh(const std::vector<CollisionPoint>& observed, double survival_time) {
  for (const auto& cp : observed) {
    Entry& e = points_[{static_cast<int>(cp.source), cp.key}];
    e.point = cp;
    e.point.remaining_survival = survival_time;
    e.sensed_threat = cp.threat;
    e.survival_time = survival_time;
    e.refreshed = true;
  }
}

void CollisionSet::decay_and_expire(double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("decay_and_expire: dt must be > 0");
  for (auto it = points_.begin(); it != points_.end();) {
    Entry& e = it->second;
    if (e.refreshed) {
      // Re-observed this tick: threat tracks the sensed value, no decay.
      e.refreshed = false;
      ++it;
      continue;
    }
    e.point.remaining_survival -= dt;
    if (e.point.remaining_survival <= 0.0) {
      it = points_.erase(it);
      continue;
    }
    e.point.threat = e.sensed_threat * e.point.remaining_survival / e.survival_time;
    ++it;
  }
}

std::vector<const CollisionPoint*> CollisionSet::points() const {
  std::vector<const CollisionPoint*> out;
  out.reserve(points_.size());
  for (const auto& [key, entry] : points_) out.push_back(&entry.point);
  return out;
}

void constraint_rows(const std::vector<const CollisionPoint*>& points, const RobotModel& model,
                     const Eigen::VectorXd& q, const AvoidanceParams& params,
                     const DecisionMap& layout, Eigen::MatrixXd& A_o, Eigen::VectorXd& b_o) {
  const int rows = static_cast<int>(points.size());
  A_o = Eigen::MatrixXd::Zero(rows, layout.width);
  b_o.resize(rows);
  for (int i = 0; i < rows; ++i) {
    const CollisionPoint& cp = *points[i];
    const Eigen::MatrixXd J = jacobian(model, q, FrameRef{cp.link, cp.local});
    const Eigen::RowVector3d n = cp.direction.transpose();
    for (int joint : model.chain_to(cp.link)) {
      const int col = layout.col_of_joint[joint];
      if (col < 0) continue;  // frozen joint, zero velocity
      A_o(i, col) = n * J.block<3, 1>(0, joint);
    }
    const double k2 = model.part_of_link(cp.link).k2;
    b_o[i] = (params.k1 - cp.gain * cp.threat) * k2;
  }
}

}  // namespace wbmc
