#pragma once

// Shared fixtures and independent oracles for the test suites. Include
// after doctest.h: the helpers use its assertion macros.

#include <Eigen/Geometry>

#include <fstream>
#include <random>
#include <sstream>

#include "modforge/kinematics.hpp"
#include "modforge/urdf.hpp"

namespace testsupport {

using namespace modforge;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline std::string data_file(const std::string& name) {
  return std::string(MODFORGE_DATA_DIR) + "/" + name;
}

inline std::shared_ptr<const ModuleSet> load_sample_set() {
  static std::shared_ptr<const ModuleSet> set = std::make_shared<const ModuleSet>(
      parse_module_set(read_file(data_file("sample_modules.json")), {}));
  return set;
}

/// Two-pitch-joint module in the style of an integrated double joint:
/// three bodies chained by two revolute joints, one connector at each end.
inline Module make_powerball() {
  Module m;
  m.id = "powerball";
  m.name = "Integrated 2-dof joint";
  auto body = [](const std::string& id, double mass, const Eigen::Vector3d& com) {
    Body b;
    b.id = id;
    b.inertia.mass = mass;
    b.inertia.com = com;
    b.inertia.tensor = Eigen::Matrix3d::Identity() * 1e-3;
    return b;
  };
  Body b1 = body("b1", 0.8, {0, 0, 0.025});
  b1.connectors.push_back({"in", connection_flip(), Gender::male, "clamp", 0.08});
  Body b2 = body("b2", 0.9, {0, 0, 0.05});
  Body b3 = body("b3", 0.8, {0, 0, 0.025});
  b3.connectors.push_back({"out", Transform::translate(0, 0, 0.05), Gender::female, "clamp", 0.08});

  Joint j1;
  j1.id = "q1";
  j1.kind = JointKind::revolute;
  j1.parent_body = "b1";
  j1.child_body = "b2";
  j1.parent2joint = Transform(Transform::rot_x(-M_PI / 2).rotation(), {0, 0, 0.05});
  j1.joint2child = Transform(Transform::rot_x(M_PI / 2).rotation(), {0, -0.05, 0});
  j1.limits = {-2.8, 2.8, 2.0, 100.0};

  Joint j2;  // roll about the chain axis
  j2.id = "q2";
  j2.kind = JointKind::revolute;
  j2.parent_body = "b2";
  j2.child_body = "b3";
  j2.parent2joint = Transform::translate(0, 0, 0.05);
  j2.joint2child = Transform::translate(0, 0, 0.05);
  j2.limits = {-2.8, 2.8, 2.0, 100.0};

  m.bodies = {b1, b2, b3};
  m.joints = {j1, j2};
  return m;
}

/// Sample set plus the powerball, for tests that need a multi-dof module.
inline std::shared_ptr<const ModuleSet> sample_set_with_powerball() {
  ModuleSet set = *load_sample_set();
  set.id = "primitives+powerball";
  Module pb = make_powerball();
  set.modules.emplace(pb.id, std::move(pb));
  return std::make_shared<const ModuleSet>(std::move(set));
}

inline Transform random_transform(std::mt19937_64& rng, double span = 0.5) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
  q.normalize();
  std::uniform_real_distribution<double> uni(-span, span);
  return Transform(q.toRotationMatrix(), Eigen::Vector3d(uni(rng), uni(rng), uni(rng)));
}

/// Random single-body module with `n_connectors` hermaphroditic connectors
/// (all mutually compatible) and optionally a base connector.
inline Module random_blob_module(std::mt19937_64& rng, const std::string& id, int n_connectors,
                                 bool with_base, bool with_eef = false) {
  Module m;
  m.id = id;
  m.name = id;
  Body b;
  b.id = "core";
  b.inertia.mass = 0.5;
  b.inertia.tensor = Eigen::Matrix3d::Identity() * 1e-3;
  for (int i = 0; i < n_connectors; ++i) {
    b.connectors.push_back({"c" + std::to_string(i), random_transform(rng),
                            Gender::hermaphroditic, "blob", 0.05});
  }
  if (with_base) {
    b.connectors.push_back({"root", random_transform(rng), Gender::hermaphroditic, "base", 0.05});
  }
  if (with_eef) {
    b.connectors.push_back({"tip", random_transform(rng), Gender::hermaphroditic, "eef", 0.05});
  }
  m.bodies = {b};
  return m;
}

/// Random tree assembly over blob modules: every instance after the first
/// attaches one free connector to a free connector of an earlier instance.
inline Assembly random_tree_assembly(std::mt19937_64& rng, int n_instances) {
  ModuleSet set;
  set.id = "random";
  const int kinds = 3;
  for (int k = 0; k < kinds; ++k) {
    Module m = random_blob_module(rng, "m" + std::to_string(k), 4, k == 0, k == 1);
    set.modules.emplace(m.id, std::move(m));
  }
  auto shared = std::make_shared<const ModuleSet>(std::move(set));

  std::vector<std::string> instances{"m0"};
  std::vector<Connection> connections;
  std::vector<std::vector<std::string>> free(1, {"c0", "c1", "c2", "c3"});
  std::uniform_int_distribution<int> kind_pick(0, kinds - 1);
  for (int i = 1; i < n_instances; ++i) {
    instances.push_back("m" + std::to_string(kind_pick(rng)));
    free.push_back({"c0", "c1", "c2", "c3"});
    // Attach to a random earlier instance with a free connector.
    for (int attempt = 0; attempt < 64; ++attempt) {
      std::size_t target = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
      if (free[target].empty()) continue;
      auto pick = [&rng](std::vector<std::string>& pool) {
        std::size_t at = std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng);
        std::string id = pool[at];
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(at));
        return id;
      };
      std::string mine = pick(free[static_cast<std::size_t>(i)]);
      std::string theirs = pick(free[target]);
      connections.push_back({target, theirs, static_cast<std::size_t>(i), mine});
      break;
    }
  }
  return Assembly::create(shared, instances, connections, BaseDesignation{0, "root"});
}

/// Independent URDF forward kinematics: world pose of every link frame by
/// chaining joint origins and motions from the root link. Never touches the
/// assembly-side model.
inline std::map<std::string, Transform> urdf_link_poses(
    const UrdfDocument& doc, const std::map<std::string, double>& q_by_joint,
    const Pose& root_pose) {
  std::map<std::string, Transform> poses;
  const UrdfLink* root = doc.root_link();
  REQUIRE(root != nullptr);
  poses[root->name] = root_pose;

  // Joints are emitted parents-first, but be order-agnostic anyway.
  std::size_t placed = 1;
  while (placed < doc.links.size()) {
    bool progress = false;
    for (const UrdfJoint& j : doc.joints) {
      if (poses.count(j.child) != 0 || poses.count(j.parent) == 0) continue;
      Transform motion;
      if (j.kind != JointKind::fixed) {
        const double q = q_by_joint.at(j.name);
        if (j.kind == JointKind::revolute) {
          motion = Transform(Eigen::AngleAxisd(q, j.axis.normalized()).toRotationMatrix(),
                             Eigen::Vector3d::Zero());
        } else {
          motion = Transform::translate(j.axis.normalized() * q);
        }
      }
      poses[j.child] = poses.at(j.parent) * j.origin * motion;
      ++placed;
      progress = true;
    }
    REQUIRE(progress);
  }
  return poses;
}

}  // namespace testsupport
