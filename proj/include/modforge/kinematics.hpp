#pragma once

#include <cstdint>
#include <set>
#include <span>

#include "modforge/assembly.hpp"

namespace modforge {

/// Joint displacements, one per non-fixed joint in model order. Radians for
/// revolute coordinates, meters for prismatic ones.
using Configuration = Eigen::VectorXd;

struct SegmentJoint {
  JointKind kind = JointKind::revolute;
  double axis_sign = 1.0;  // -1 when the source joint is traversed child-to-parent
  JointLimits limits;
  std::string name;
};

/// One node of the flattened kinematic tree. The segment frame sits at
/// origin relative to the parent segment frame, displaced by the joint
/// motion when a joint is present. Inertia is given about the center of
/// mass in segment axes.
struct Segment {
  std::string name;
  int parent = -1;
  Transform origin;
  std::optional<SegmentJoint> joint;
  double mass = 0.0;
  Eigen::Vector3d com = Eigen::Vector3d::Zero();
  Eigen::Matrix3d inertia = Eigen::Matrix3d::Zero();
  std::vector<Geometry> collisions;  // poses relative to the segment frame
};

/// Flattened robot derived from an assembly (or built directly for tests):
/// ordered segments with parents preceding children, named frames, and a
/// world base pose. Immutable after construction; evaluation functions are
/// pure and reentrant.
class RobotModel {
 public:
  /// Segments must be topologically ordered (parent < index, one root).
  RobotModel(std::vector<Segment> segments, Pose base_pose);

  const std::vector<Segment>& segments() const { return segments_; }
  const Pose& base_pose() const { return base_pose_; }
  int dof() const { return static_cast<int>(joint_segments_.size()); }

  /// Segment index carrying the k-th joint coordinate.
  const std::vector<int>& joint_segments() const { return joint_segments_; }
  std::vector<std::string> joint_names() const;
  const JointLimits& limits(int joint_index) const;

  struct FrameRef {
    int segment = 0;
    Transform offset;
  };

  bool has_frame(const std::string& key) const { return frames_.count(key) != 0; }
  const FrameRef& frame(const std::string& key) const;
  void add_frame(const std::string& key, FrameRef ref);

  /// Frame key of the first terminal end-effector connector (breadth-first
  /// order); empty when the model has none.
  const std::string& eef_frame() const { return eef_frame_; }
  void set_eef_frame(const std::string& key) { eef_frame_ = key; }

  /// Segment pairs exempt from self-collision checks: each collision-bearing
  /// segment with its nearest collision-bearing ancestor.
  bool collision_exempt(int seg_a, int seg_b) const;

  /// World pose of every segment frame.
  std::vector<Transform> segment_poses(const Configuration& q) const;

 private:
  std::vector<Segment> segments_;
  Pose base_pose_;
  std::vector<int> joint_segments_;
  std::map<std::string, FrameRef> frames_;
  std::string eef_frame_;
  std::set<std::pair<int, int>> exempt_pairs_;
};

/// Flattens an assembly by a breadth-first iteration over its assembly
/// graph: one segment per graph node, joints displacing their node frames.
/// Frames are keyed by assembly node ("0/b:tube"), with "<i>_<bodyId>" link
/// aliases where unambiguous. Throws std::invalid_argument on cyclic
/// assembly graphs. base_override replaces the assembly's base pose.
RobotModel to_robot_model(const Assembly& a,
                          std::optional<Pose> base_override = std::nullopt);

/// World pose of a frame: the product of pre-transforms and joint motions
/// from the root, left-multiplied by the base pose.
Transform fk(const RobotModel& m, const Configuration& q, const std::string& frame);

/// Geometric Jacobian at the frame origin, expressed in world axes; rows
/// 1-3 linear, rows 4-6 angular. Central finite differences with step 1e-6.
Eigen::Matrix<double, 6, Eigen::Dynamic> jacobian(const RobotModel& m, const Configuration& q,
                                                  const std::string& frame);

struct IkOptions {
  double damping = 1e-2;
  double step_clamp = 0.5;  // rad or m per coordinate per iteration
  int max_iterations = 500;
  int restarts = 10;  // seeded random restarts after the provided seed fails
  double pos_tolerance = 1e-4;   // m
  double rot_tolerance = 1e-3;   // rad, geodesic angle
  std::uint64_t rng_seed = 0;
  std::string frame;  // defaults to the model's eef frame
};

struct IkResult {
  bool success = false;
  Configuration q;
  double pos_residual = 0.0;
  double rot_residual = 0.0;
};

/// Damped-least-squares inverse kinematics with joint-limit clamping.
/// Non-convergence yields success = false, never a fault.
IkResult ik(const RobotModel& m, const Pose& target, const Configuration& seed,
            const IkOptions& opts = {});

/// Joint torques/forces balancing inertial and gravitational loads
/// (recursive Newton-Euler over the segment tree).
Configuration inverse_dynamics(const RobotModel& m, const Configuration& q,
                               const Configuration& qd, const Configuration& qdd,
                               const Eigen::Vector3d& gravity = {0.0, 0.0, -9.81});

/// A primitive placed in the world; the effective pose is pose * geometry.pose.
struct PlacedShape {
  Geometry geometry;
  Pose pose;
};

/// True iff no robot collision primitive intersects any obstacle and no
/// non-adjacent pair of robot primitives intersects. Cylinders against
/// boxes or cylinders are over-approximated as capsules; mesh geometry is
/// never intersected.
bool collision_free(const RobotModel& m, const Configuration& q,
                    std::span<const PlacedShape> obstacles);

/// Uniform sample within the position limits; deterministic per seed.
Configuration random_configuration(const RobotModel& m, std::uint64_t rng_seed);

struct Trajectory {
  std::vector<Configuration> configurations;
  double dt = 0.1;  // seconds between consecutive configurations
};

/// Uniform joint-space interpolation inclusive of both endpoints; steps >= 2.
Trajectory linear_trajectory(const Configuration& q0, const Configuration& q1, int steps,
                             double dt);

/// CSV with header "t,q0..qn", one configuration per row.
std::string write_trajectory_csv(const Trajectory& t);

}  // namespace modforge
