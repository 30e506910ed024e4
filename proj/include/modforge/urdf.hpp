#pragma once

#include "modforge/assembly.hpp"

namespace modforge {

struct UrdfInertial {
  double mass = 0.0;
  Transform origin;  // link frame -> inertial frame (at the center of mass)
  Eigen::Matrix3d inertia = Eigen::Matrix3d::Zero();  // in the inertial frame
};

struct UrdfLink {
  std::string name;
  UrdfInertial inertial;
  std::vector<Geometry> visuals;     // poses relative to the link frame
  std::vector<Geometry> collisions;
};

struct UrdfJoint {
  std::string name;
  JointKind kind = JointKind::fixed;
  std::string parent;
  std::string child;
  Transform origin;  // parent link frame -> joint frame
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();
  std::optional<JointLimits> limits;
};

struct UrdfDocument {
  std::string name;
  std::vector<UrdfLink> links;    // emission order
  std::vector<UrdfJoint> joints;  // emission order

  const UrdfLink* find_link(const std::string& link_name) const;
  const UrdfJoint* find_joint(const std::string& joint_name) const;
  /// The single link that is not the child of any joint.
  const UrdfLink* root_link() const;
};

/// Exports an assembly as a URDF document by a breadth-first traversal of
/// the assembly graph from the base connector. Bodies become links placed
/// relative to the nearest upstream joint frame, module joints become
/// movable joints, and each connection contributes one fixed joint named
/// after the child-side connector. Unconnected "eef" connectors terminate
/// in a fixed joint to a near-massless link. Throws std::invalid_argument
/// when the assembly graph contains a cycle (URDF cannot express closed
/// chains).
UrdfDocument generate_urdf(const Assembly& a, const std::string& name);

/// Deterministic URDF XML: UTF-8, LF line endings, 2-space indentation,
/// 12 significant digits, origins as xyz + fixed-axis roll-pitch-yaw.
std::string write_xml(const UrdfDocument& doc);

/// Parses URDF covering links, revolute/prismatic/fixed joints, origins,
/// axes, limits, inertials, and primitive or mesh geometry. Throws
/// ParseError on malformed XML, unsupported joint kinds, or dangling link
/// references.
UrdfDocument read_urdf(const std::string& xml);

/// Fixed-axis roll-pitch-yaw (x, then y, then z) of a rotation. A singular
/// pitch of +-pi/2 is resolved by setting roll to 0.
Eigen::Vector3d rpy_from_rotation(const Eigen::Matrix3d& r);
Eigen::Matrix3d rotation_from_rpy(double roll, double pitch, double yaw);

}  // namespace modforge
