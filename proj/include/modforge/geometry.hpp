#pragma once

#include <Eigen/Core>

namespace modforge {

enum class JointKind { revolute, prismatic, fixed };

const char* to_string(JointKind kind);
JointKind joint_kind_from_string(const std::string& s);

/// Rigid roto-translation, stored as a 3x3 rotation matrix plus a 3-vector.
/// Equivalent to a 4x4 homogeneous matrix with bottom row (0,0,0,1).
/// Immutable value type; all lengths in meters, all angles in radians.
class Transform {
 public:
  Transform()
      : rotation_(Eigen::Matrix3d::Identity()),
        translation_(Eigen::Vector3d::Zero()) {}

  Transform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
      : rotation_(rotation), translation_(translation) {}

  static Transform identity() { return Transform(); }
  static Transform from_matrix(const Eigen::Matrix4d& m);

  static Transform rot_x(double angle);
  static Transform rot_y(double angle);
  static Transform rot_z(double angle);
  static Transform translate(double x, double y, double z);
  static Transform translate(const Eigen::Vector3d& p);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }
  Eigen::Matrix4d matrix() const;

  /// Composition a*b applies b first in a's frame (matrix product).
  /// The rotation is re-orthonormalized via polar decomposition only when
  /// accumulated drift exceeds 1e-9.
  Transform operator*(const Transform& other) const;

  /// Analytic inverse (R^T, -R^T p).
  Transform inverse() const;

  Eigen::Vector3d apply(const Eigen::Vector3d& point) const;

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

/// A Transform interpreted as an absolute placement in world coordinates.
using Pose = Transform;

Transform compose(const Transform& a, const Transform& b);
Transform invert(const Transform& t);

/// Mating transform between two attached connector frames: a 180° rotation
/// about the x-axis. Self-inverse.
Transform connection_flip();

/// Displacement of a joint at coordinate q: rotation of q about the local
/// z-axis (revolute) or translation of q along it (prismatic). Fixed joints
/// yield the identity.
Transform joint_motion(JointKind kind, double q);

/// True iff the max absolute entrywise difference of the 4x4 matrices is
/// within tol.
bool approx_eq(const Transform& a, const Transform& b, double tol);

/// Max absolute entry of R^T R - I.
double orthonormal_drift(const Eigen::Matrix3d& r);

/// R^T R = I within tol per entry and det(R) = +1 within tol.
bool is_rotation(const Eigen::Matrix3d& r, double tol = 1e-9);

/// Nearest orthonormal matrix (polar decomposition via SVD).
Eigen::Matrix3d orthonormalized(const Eigen::Matrix3d& r);

/// Geodesic angle of a rotation, in [0, pi].
double rotation_angle(const Eigen::Matrix3d& r);

/// Axis-angle vector (axis scaled by angle) of a rotation.
Eigen::Vector3d rotation_vector(const Eigen::Matrix3d& r);

}  // namespace modforge
