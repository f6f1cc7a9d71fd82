#pragma once

#include <deque>
#include <map>
#include <mutex>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "wbmc/kinematics.hpp"

namespace wbmc {

enum class ObstacleSource { Visual, Proximity, Tactile, SelfCollision, Static };
const char* to_string(ObstacleSource s);

/// Unified obstacle record: projected position on the robot (link frame),
/// collision direction, threat level and severity gain.
struct CollisionPoint {
  int link = -1;
  Eigen::Vector3d local = Eigen::Vector3d::Zero();  // P_C in the link frame
  Eigen::Vector3d direction = Eigen::Vector3d::UnitX();  // n_C, unit, world frame
  double threat = 0.0;        // a_t in [0, 1]
  double gain = 1.0;          // V_C
  double remaining_survival = 0.0;  // s
  ObstacleSource source = ObstacleSource::Visual;
  std::string key;  // identity for refresh matching
};

struct VisualKeypoint {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // world frame, m
  enum class Kind { Body, Hand } kind = Kind::Body;
};

struct ProximityReading {
  std::string sensor_id;
  double distance = 0.0;  // m, >= 0
};

struct TactileContact {
  int taxel_id = 0;
  int link = -1;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // link frame
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();   // link frame, unit
  double pressure = 0.0;  // normalized to [0, 1] by max_pressure upstream of clustering
};

using SensorEvent = std::variant<VisualKeypoint, ProximityReading, TactileContact>;

struct AvoidanceParams {
  double k1 = 0.3;
  // k2 lives per body part in the robot model.
  double pps_range = 0.45;             // m
  double survival_time = 2.0;          // s
  double pressure_threshold = 0.1;     // normalized
  double max_pressure = 1.0;           // raw-to-normalized divisor
  double tactile_cluster_radius = 0.04;  // m
  double self_collision_threshold = 0.06;  // m, zero of the threat formula
  double gain_visual = 1.0;
  double gain_proximity = 1.1;
  double gain_tactile = 1.3;
  double gain_self = 1.2;
  double gain_static = 1.0;
};

/// Cross-thread hand-off for asynchronously arriving sensor events; preserves
/// per-source arrival order. Drained once per control tick.
class SensorEventQueue {
 public:
  void push(SensorEvent event);
  std::vector<SensorEvent> drain();

 private:
  std::mutex mutex_;
  std::deque<SensorEvent> events_;
};

/// Which body parts project against which obstacle sets.
enum class ControlMode { Single, Dual };

/// Per body part, at most one point: nearest surface sample to the nearest
/// in-range keypoint, threat 1 - d/pps_range.
std::vector<CollisionPoint> project_visual(const std::vector<VisualKeypoint>& keypoints,
                                           const RobotModel& model, const Eigen::VectorXd& q,
                                           const AvoidanceParams& params,
                                           const std::vector<const BodyPart*>& parts);

/// Readings closer than pps_range become points at the sensor mount, directed
/// along the beam. Unknown sensor ids throw.
std::vector<CollisionPoint> project_proximity(const std::vector<ProximityReading>& readings,
                                              const RobotModel& model, const Eigen::VectorXd& q,
                                              const AvoidanceParams& params);

/// Per link, contacts above the pressure threshold within the cluster radius
/// merge into one super contact at their centroid, keeping the max-pressure
/// taxel's normal and pressure.
std::vector<CollisionPoint> cluster_tactile(const std::vector<TactileContact>& contacts,
                                            const RobotModel& model, const Eigen::VectorXd& q,
                                            const AvoidanceParams& params);

/// Closest sample pair per (projected part, obstacle part) combination.
/// Single mode: controlled-arm hand/forearm against the torso. Dual mode: the
/// secondary arm's hand/forearm against torso and the primary arm's
/// hand/forearm/upper-arm; the primary arm never avoids the secondary.
std::vector<CollisionPoint> self_collision_points(const RobotModel& model,
                                                  const Eigen::VectorXd& q,
                                                  const AvoidanceParams& params, ControlMode mode,
                                                  ArmSide primary_arm);

/// Same pairing rule with an external static sample set as the obstacle side;
/// all controlled body parts project. Ties broken by lowest sample index.
std::vector<CollisionPoint> static_obstacle_points(
    const std::vector<Eigen::Vector3d>& static_samples, const RobotModel& model,
    const Eigen::VectorXd& q, const AvoidanceParams& params,
    const std::vector<const BodyPart*>& projected_parts);

/// Time-decaying collision point container keyed by (source, key).
class CollisionSet {
 public:
  /// Re-observed keys reset survival and threat; new keys are inserted.
  void refresh(const std::vector<CollisionPoint>& observed, double survival_time);

  /// Linear threat decay over the survival window; expired points removed.
  void decay_and_expire(double dt);

  std::vector<const CollisionPoint*> points() const;
  size_t size() const { return points_.size(); }
  void clear() { points_.clear(); }

 private:
  struct Entry {
    CollisionPoint point;
    double sensed_threat = 0.0;
    double survival_time = 0.0;
    bool refreshed = false;
  };
  std::map<std::pair<int, std::string>, Entry> points_;
};

/// Maps model joint columns into decision-vector columns; -1 freezes a joint.
struct DecisionMap {
  std::vector<int> col_of_joint;
  int width = 0;
};

/// One inequality row per collision point: n_C^T J_C over the joints of the
/// chain ending at P_C, rhs (k1 - V_C a_t) k2(body part of P_C).
void constraint_rows(const std::vector<const CollisionPoint*>& points, const RobotModel& model,
                     const Eigen::VectorXd& q, const AvoidanceParams& params,
                     const DecisionMap& layout, Eigen::MatrixXd& A_o, Eigen::VectorXd& b_o);

/// Threat of a self-collision/static pair at distance d: max(0, 1 - 50 d / 3).
double proximity_threat(double distance);

}  // namespace wbmc
