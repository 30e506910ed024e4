#include "modforge/geometry.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>

namespace modforge {

namespace {
constexpr double kDriftThreshold = 1e-9;
}

const char* to_string(JointKind kind) {
  switch (kind) {
    case JointKind::revolute:
      return "revolute";
    case JointKind::prismatic:
      return "prismatic";
    case JointKind::fixed:
      return "fixed";
  }
  return "?";
}

JointKind joint_kind_from_string(const std::string& s) {
  if (s == "revolute") return JointKind::revolute;
  if (s == "prismatic") return JointKind::prismatic;
  if (s == "fixed") return JointKind::fixed;
  throw std::invalid_argument("unknown joint kind: " + s);
}

Transform Transform::from_matrix(const Eigen::Matrix4d& m) {
  return Transform(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
}

Transform Transform::rot_x(double angle) {
  return Transform(Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitX()).toRotationMatrix(),
                   Eigen::Vector3d::Zero());
}

Transform Transform::rot_y(double angle) {
  return Transform(Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitY()).toRotationMatrix(),
                   Eigen::Vector3d::Zero());
}

Transform Transform::rot_z(double angle) {
  return Transform(Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitZ()).toRotationMatrix(),
                   Eigen::Vector3d::Zero());
}

Transform Transform::translate(double x, double y, double z) {
  return Transform(Eigen::Matrix3d::Identity(), Eigen::Vector3d(x, y, z));
}

Transform Transform::translate(const Eigen::Vector3d& p) {
  return Transform(Eigen::Matrix3d::Identity(), p);
}

Eigen::Matrix4d Transform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Transform Transform::operator*(const Transform& other) const {
  Eigen::Matrix3d r = rotation_ * other.rotation_;
  if (orthonormal_drift(r) > kDriftThreshold) {
    r = orthonormalized(r);
  }
  return Transform(r, rotation_ * other.translation_ + translation_);
}

Transform Transform::inverse() const {
  Eigen::Matrix3d rt = rotation_.transpose();
  return Transform(rt, -(rt * translation_));
}

Eigen::Vector3d Transform::apply(const Eigen::Vector3d& point) const {
  return rotation_ * point + translation_;
}

Transform compose(const Transform& a, const Transform& b) { return a * b; }

Transform invert(const Transform& t) { return t.inverse(); }

Transform connection_flip() {
  Eigen::Matrix3d r;
  r << 1, 0, 0, 0, -1, 0, 0, 0, -1;  // exact R_x(pi)
  return Transform(r, Eigen::Vector3d::Zero());
}

Transform joint_motion(JointKind kind, double q) {
  switch (kind) {
    case JointKind::revolute:
      return Transform::rot_z(q);
    case JointKind::prismatic:
      return Transform::translate(0.0, 0.0, q);
    case JointKind::fixed:
      return Transform::identity();
  }
  return Transform::identity();
}

bool approx_eq(const Transform& a, const Transform& b, double tol) {
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff() <= tol;
}

double orthonormal_drift(const Eigen::Matrix3d& r) {
  return (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

bool is_rotation(const Eigen::Matrix3d& r, double tol) {
  return orthonormal_drift(r) <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

Eigen::Matrix3d orthonormalized(const Eigen::Matrix3d& r) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) {
    u.col(2) = -u.col(2);
  }
  return u * v.transpose();
}

double rotation_angle(const Eigen::Matrix3d& r) {
  double c = (r.trace() - 1.0) / 2.0;
  return std::acos(std::clamp(c, -1.0, 1.0));
}

Eigen::Vector3d rotation_vector(const Eigen::Matrix3d& r) {
  Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

}  // namespace modforge
