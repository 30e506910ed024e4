#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Geometry>

#include <random>

#include "modforge/geometry.hpp"

using namespace modforge;

namespace {

std::mt19937_64 rng(42);

Transform random_transform() {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
  q.normalize();
  std::uniform_real_distribution<double> uni(-2.0, 2.0);
  return Transform(q.toRotationMatrix(), Eigen::Vector3d(uni(rng), uni(rng), uni(rng)));
}

}  // namespace

TEST_CASE("identity") {
  Transform id = Transform::identity();
  CHECK(id.rotation().isApprox(Eigen::Matrix3d::Identity()));
  CHECK(id.translation().isZero());

  Transform t = random_transform();
  CHECK(approx_eq(compose(Transform::identity(), t), t, 1e-15));
  CHECK(approx_eq(compose(t, Transform::identity()), t, 1e-15));
  CHECK(approx_eq(invert(Transform::identity()), Transform::identity(), 0.0));
}

TEST_CASE("compose") {
  CHECK(approx_eq(compose(Transform::rot_x(M_PI), Transform::rot_x(M_PI)),
                  Transform::identity(), 1e-15));

  Transform t = compose(Transform::translate(1, 0, 0), Transform::translate(0, 2, 0));
  CHECK(t.translation().isApprox(Eigen::Vector3d(1, 2, 0)));

  // Frozen from multiplying the two 4x4 matrices by hand:
  //   rot_x(pi/2) * translate(0,1,0) rotates the y-offset onto +z.
  Transform r = compose(Transform::rot_x(M_PI / 2), Transform::translate(0, 1, 0));
  CHECK(r.translation().isApprox(Eigen::Vector3d(0, 0, 1), 1e-12));
  CHECK(r.rotation().isApprox(Transform::rot_x(M_PI / 2).rotation(), 1e-12));
}

TEST_CASE("invert") {
  Transform t = invert(Transform::translate(1, 2, 3));
  CHECK(t.translation().isApprox(Eigen::Vector3d(-1, -2, -3)));

  CHECK(approx_eq(invert(Transform::rot_x(M_PI)), Transform::rot_x(M_PI), 1e-15));

  for (int i = 0; i < 100; ++i) {
    Transform a = random_transform();
    Transform b = random_transform();
    // Oracle: numeric inverse of the composed 4x4 matrix.
    Eigen::Matrix4d expected = (a.matrix() * b.matrix()).inverse();
    CHECK((invert(compose(a, b)).matrix() - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(approx_eq(invert(compose(a, b)), compose(invert(b), invert(a)), 1e-12));
  }
}

TEST_CASE("connection_flip") {
  Transform f = connection_flip();
  Eigen::Matrix3d expected;
  expected << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  CHECK(f.rotation().isApprox(expected, 1e-15));
  CHECK(f.translation().isZero());

  CHECK(approx_eq(compose(f, f), Transform::identity(), 1e-15));
  CHECK(f.apply(Eigen::Vector3d(0, 0, 1)).isApprox(Eigen::Vector3d(0, 0, -1)));
}

TEST_CASE("joint_motion") {
  CHECK(approx_eq(joint_motion(JointKind::revolute, 0.0), Transform::identity(), 0.0));
  CHECK(approx_eq(joint_motion(JointKind::prismatic, 0.0), Transform::identity(), 0.0));

  Transform p = joint_motion(JointKind::prismatic, 0.5);
  CHECK(p.translation().isApprox(Eigen::Vector3d(0, 0, 0.5)));
  CHECK(p.rotation().isIdentity());

  // Oracle: the z-rotation matrix at pi/2 maps x-hat onto y-hat.
  Transform r = joint_motion(JointKind::revolute, M_PI / 2);
  CHECK(r.apply(Eigen::Vector3d(1, 0, 0)).isApprox(Eigen::Vector3d(0, 1, 0), 1e-12));
}

TEST_CASE("approx_eq") {
  Transform t = random_transform();
  CHECK(approx_eq(t, t, 1e-12));
  CHECK_FALSE(approx_eq(Transform::identity(), Transform::translate(1e-6, 0, 0), 1e-9));
  for (int i = 0; i < 100; ++i) {
    Transform a = random_transform();
    CHECK(approx_eq(compose(a, invert(a)), Transform::identity(), 1e-12));
  }
}

TEST_CASE("algebra properties") {
  for (int i = 0; i < 2000; ++i) {
    Transform t = random_transform();
    CHECK(approx_eq(compose(t, invert(t)), Transform::identity(), 1e-12));
  }
  for (int i = 0; i < 2000; ++i) {
    Transform a = random_transform();
    Transform b = random_transform();
    Transform c = random_transform();
    CHECK(approx_eq(compose(compose(a, b), c), compose(a, compose(b, c)), 1e-10));
  }
  CHECK(is_rotation(connection_flip().rotation(), 1e-15));
  CHECK(approx_eq(invert(connection_flip()), connection_flip(), 1e-15));
}

TEST_CASE("products stay orthonormal") {
  Transform acc = Transform::identity();
  for (int i = 0; i < 5000; ++i) acc = acc * random_transform();
  CHECK(is_rotation(acc.rotation(), 1e-9));
  CHECK(std::abs(acc.rotation().determinant() - 1.0) < 1e-9);
}

TEST_CASE("orthonormalized recovers a drifted rotation") {
  Transform t = random_transform();
  Eigen::Matrix3d drifted = t.rotation() + Eigen::Matrix3d::Constant(1e-6);
  Eigen::Matrix3d fixed = orthonormalized(drifted);
  CHECK(is_rotation(fixed, 1e-12));
  CHECK((fixed - t.rotation()).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("rotation angle and vector") {
  CHECK(rotation_angle(Eigen::Matrix3d::Identity()) == doctest::Approx(0.0));
  CHECK(rotation_angle(Transform::rot_y(0.7).rotation()) == doctest::Approx(0.7));
  Eigen::Vector3d v = rotation_vector(Transform::rot_z(-0.3).rotation());
  CHECK(v.isApprox(Eigen::Vector3d(0, 0, -0.3), 1e-12));
}
