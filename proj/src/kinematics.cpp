#include "modforge/kinematics.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <sstream>

namespace modforge {

RobotModel::RobotModel(std::vector<Segment> segments, Pose base_pose)
    : segments_(std::move(segments)), base_pose_(base_pose) {
  if (segments_.empty()) throw std::invalid_argument("robot model has no segments");
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const Segment& s = segments_[i];
    if (i == 0 ? s.parent != -1 : (s.parent < 0 || s.parent >= static_cast<int>(i))) {
      throw std::invalid_argument("segments must be topologically ordered with one root");
    }
    if (s.joint && s.joint->kind != JointKind::fixed) {
      joint_segments_.push_back(static_cast<int>(i));
    }
    frames_.emplace(s.name, FrameRef{static_cast<int>(i), Transform::identity()});
  }

  // Self-collision exemptions: nearest collision-bearing ancestor pairs.
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (segments_[i].collisions.empty()) continue;
    int p = segments_[i].parent;
    while (p >= 0 && segments_[p].collisions.empty()) p = segments_[p].parent;
    if (p >= 0) {
      exempt_pairs_.insert({p, static_cast<int>(i)});
    }
  }
}

std::vector<std::string> RobotModel::joint_names() const {
  std::vector<std::string> names;
  names.reserve(joint_segments_.size());
  for (int seg : joint_segments_) names.push_back(segments_[seg].joint->name);
  return names;
}

const JointLimits& RobotModel::limits(int joint_index) const {
  return segments_[joint_segments_.at(joint_index)].joint->limits;
}

const RobotModel::FrameRef& RobotModel::frame(const std::string& key) const {
  auto it = frames_.find(key);
  if (it == frames_.end()) {
    throw std::invalid_argument("unknown frame '" + key + "'");
  }
  return it->second;
}

void RobotModel::add_frame(const std::string& key, FrameRef ref) {
  frames_.emplace(key, std::move(ref));
}

bool RobotModel::collision_exempt(int seg_a, int seg_b) const {
  if (seg_a > seg_b) std::swap(seg_a, seg_b);
  return exempt_pairs_.count({seg_a, seg_b}) != 0;
}

std::vector<Transform> RobotModel::segment_poses(const Configuration& q) const {
  if (q.size() != dof()) {
    throw std::invalid_argument("configuration has " + std::to_string(q.size()) +
                                " coordinates, model has " + std::to_string(dof()));
  }
  std::vector<Transform> world;
  world.reserve(segments_.size());
  int joint_index = 0;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const Segment& s = segments_[i];
    Transform local = s.origin;
    if (s.joint && s.joint->kind != JointKind::fixed) {
      local = local * joint_motion(s.joint->kind, s.joint->axis_sign * q[joint_index]);
      ++joint_index;
    }
    if (s.parent < 0) {
      world.push_back(base_pose_ * local);
    } else {
      world.push_back(world[s.parent] * local);
    }
  }
  return world;
}

RobotModel to_robot_model(const Assembly& a, std::optional<Pose> base_override) {
  AssemblyGraph g = assembly_graph(a);
  if (!is_tree(g)) {
    throw std::invalid_argument("assembly graph contains a cycle: cannot flatten to a tree model");
  }

  std::vector<Segment> segments;
  std::map<AssemblyNode, int> segment_of;
  std::vector<std::pair<std::string, int>> aliases;  // candidate name -> segment
  std::string eef_key;

  auto make_segment = [&](const AssemblyNode& node, int parent,
                          const Transform& origin) -> Segment& {
    Segment s;
    s.name = to_string(node);
    s.parent = parent;
    s.origin = origin;
    segment_of[node] = static_cast<int>(segments.size());
    segments.push_back(std::move(s));
    return segments.back();
  };

  auto fill_body = [&](Segment& s, const AssemblyNode& node) {
    const Module& m = a.module_at(static_cast<std::size_t>(node.instance));
    const Body& b = *m.find_body(node.local.name);
    s.mass = b.inertia.mass;
    s.com = b.inertia.com;
    s.inertia = b.inertia.tensor;
    if (b.collision) s.collisions.push_back(*b.collision);
    aliases.emplace_back(std::to_string(node.instance) + "_" + b.id,
                         static_cast<int>(segments.size()) - 1);
  };

  // Root: the base connector node.
  make_segment(g.base_node, -1, Transform::identity());

  for (const BfsStep& step : bfs_steps(g, g.base_node)) {
    const AssemblyNode& s = step.successor;
    int parent = segment_of.at(step.node);
    Segment& seg = make_segment(s, parent, step.edge->transition);
    if (s.local.kind == NodeKind::body) {
      fill_body(seg, s);
    } else if (s.local.kind == NodeKind::joint) {
      const Module& m = a.module_at(static_cast<std::size_t>(s.instance));
      const Joint& j = *m.find_joint(s.local.name);
      SegmentJoint sj;
      sj.kind = j.kind;
      sj.axis_sign = step.node.local.name == j.parent_body ? 1.0 : -1.0;
      sj.limits = j.limits;
      sj.name = std::to_string(s.instance) + "_" + j.id;
      seg.joint = std::move(sj);
    } else if (!step.edge->is_connection) {
      // Connector reached from its own body; remember the first loose eef.
      const Module& m = a.module_at(static_cast<std::size_t>(s.instance));
      auto slash = s.local.name.find('/');
      ConnectorRef ref{s.local.name.substr(0, slash), s.local.name.substr(slash + 1)};
      const Connector& c = *m.find_connector(ref);
      if (eef_key.empty() && c.kind == kEefConnectorKind && g.adjacency.at(s).size() == 1) {
        eef_key = to_string(s);
        aliases.emplace_back(std::to_string(s.instance) + "_" + ref.connector_id + "_link",
                             static_cast<int>(segments.size()) - 1);
      }
    }
  }

  RobotModel model(std::move(segments), base_override.value_or(a.base_pose()));
  for (const auto& [name, seg] : aliases) {
    if (!model.has_frame(name)) model.add_frame(name, {seg, Transform::identity()});
  }
  model.set_eef_frame(eef_key);
  return model;
}

Transform fk(const RobotModel& m, const Configuration& q, const std::string& frame) {
  const RobotModel::FrameRef& ref = m.frame(frame);
  return m.segment_poses(q)[ref.segment] * ref.offset;
}

Eigen::Matrix<double, 6, Eigen::Dynamic> jacobian(const RobotModel& m, const Configuration& q,
                                                  const std::string& frame) {
  constexpr double kStep = 1e-6;
  const int n = m.dof();
  Eigen::Matrix<double, 6, Eigen::Dynamic> j(6, n);
  Configuration probe = q;
  for (int k = 0; k < n; ++k) {
    probe[k] = q[k] + kStep;
    Transform plus = fk(m, probe, frame);
    probe[k] = q[k] - kStep;
    Transform minus = fk(m, probe, frame);
    probe[k] = q[k];
    j.block<3, 1>(0, k) = (plus.translation() - minus.translation()) / (2.0 * kStep);
    Eigen::Matrix3d dr = plus.rotation() * minus.rotation().transpose();
    Eigen::Matrix3d skew = (dr - dr.transpose()) / 2.0;
    j.block<3, 1>(3, k) =
        Eigen::Vector3d(skew(2, 1), skew(0, 2), skew(1, 0)) / (2.0 * kStep);
  }
  return j;
}

namespace {

Configuration clamp_to_limits(const RobotModel& m, Configuration q) {
  for (int k = 0; k < m.dof(); ++k) {
    const JointLimits& l = m.limits(k);
    q[k] = std::clamp(q[k], l.pos_min, l.pos_max);
  }
  return q;
}

}  // namespace

IkResult ik(const RobotModel& m, const Pose& target, const Configuration& seed,
            const IkOptions& opts) {
  if (seed.size() != m.dof()) {
    throw std::invalid_argument("seed has " + std::to_string(seed.size()) +
                                " coordinates, model has " + std::to_string(m.dof()));
  }
  const std::string frame = opts.frame.empty() ? m.eef_frame() : opts.frame;
  if (frame.empty()) {
    throw std::invalid_argument("model has no end-effector frame; set IkOptions::frame");
  }

  std::mt19937_64 rng(opts.rng_seed);
  IkResult best;
  best.q = clamp_to_limits(m, seed);
  best.pos_residual = std::numeric_limits<double>::infinity();
  best.rot_residual = std::numeric_limits<double>::infinity();

  auto residuals = [&](const Configuration& q, Eigen::Vector3d* e_pos,
                       Eigen::Vector3d* e_rot) {
    Transform current = fk(m, q, frame);
    *e_pos = target.translation() - current.translation();
    *e_rot = rotation_vector(target.rotation() * current.rotation().transpose());
  };

  for (int attempt = 0; attempt <= opts.restarts; ++attempt) {
    Configuration q = best.q;
    if (attempt > 0) {
      q.resize(m.dof());
      for (int k = 0; k < m.dof(); ++k) {
        const JointLimits& l = m.limits(k);
        q[k] = std::uniform_real_distribution<double>(l.pos_min, l.pos_max)(rng);
      }
    } else {
      q = clamp_to_limits(m, seed);
    }

    for (int iter = 0; iter <= opts.max_iterations; ++iter) {
      Eigen::Vector3d e_pos, e_rot;
      residuals(q, &e_pos, &e_rot);
      const double pn = e_pos.norm();
      const double rn = e_rot.norm();
      if (pn + rn < best.pos_residual + best.rot_residual) {
        best.q = q;
        best.pos_residual = pn;
        best.rot_residual = rn;
      }
      if (pn <= opts.pos_tolerance && rn <= opts.rot_tolerance) {
        best.success = true;
        best.q = q;
        best.pos_residual = pn;
        best.rot_residual = rn;
        return best;
      }
      if (iter == opts.max_iterations || m.dof() == 0) break;

      Eigen::Matrix<double, 6, 1> error;
      error << e_pos, e_rot;
      auto j = jacobian(m, q, frame);
      Eigen::Matrix<double, 6, 6> jjt = j * j.transpose();
      jjt.diagonal().array() += opts.damping * opts.damping;
      Configuration dq = j.transpose() * jjt.ldlt().solve(error);
      dq = dq.cwiseMax(-opts.step_clamp).cwiseMin(opts.step_clamp);
      q = clamp_to_limits(m, q + dq);
    }
    if (m.dof() == 0) break;  // nothing to vary, restarts are pointless
  }
  return best;
}

Configuration inverse_dynamics(const RobotModel& m, const Configuration& q,
                               const Configuration& qd, const Configuration& qdd,
                               const Eigen::Vector3d& gravity) {
  if (q.size() != m.dof() || qd.size() != m.dof() || qdd.size() != m.dof()) {
    throw std::invalid_argument("inverse_dynamics requires |q| = |qd| = |qdd| = dof");
  }
  const auto& segments = m.segments();
  const std::size_t n = segments.size();

  // Joint coordinate index per segment, -1 when fixed.
  std::vector<int> coord(n, -1);
  for (std::size_t k = 0; k < m.joint_segments().size(); ++k) {
    coord[m.joint_segments()[k]] = static_cast<int>(k);
  }

  std::vector<Eigen::Matrix3d> rot(n);    // parent frame -> segment frame
  std::vector<Eigen::Vector3d> pos(n);    // segment origin in parent frame
  std::vector<Eigen::Vector3d> omega(n), alpha(n), acc(n);
  const Eigen::Vector3d z = Eigen::Vector3d::UnitZ();

  for (std::size_t i = 0; i < n; ++i) {
    const Segment& s = segments[i];
    const int k = coord[i];
    const double qi = k >= 0 ? s.joint->axis_sign * q[k] : 0.0;
    const double qdi = k >= 0 ? s.joint->axis_sign * qd[k] : 0.0;
    const double qddi = k >= 0 ? s.joint->axis_sign * qdd[k] : 0.0;

    Transform local = s.origin;
    if (k >= 0) local = local * joint_motion(s.joint->kind, qi);
    if (s.parent < 0) local = m.base_pose() * local;
    rot[i] = local.rotation();
    pos[i] = local.translation();

    const Eigen::Matrix3d rt = rot[i].transpose();
    Eigen::Vector3d w_p, al_p, a_p;
    if (s.parent < 0) {
      w_p.setZero();
      al_p.setZero();
      a_p = -gravity;  // gravity as an upward base acceleration
    } else {
      w_p = omega[s.parent];
      al_p = alpha[s.parent];
      a_p = acc[s.parent];
    }

    omega[i] = rt * w_p;
    alpha[i] = rt * al_p;
    acc[i] = rt * (a_p + al_p.cross(pos[i]) + w_p.cross(w_p.cross(pos[i])));
    if (k >= 0 && s.joint->kind == JointKind::revolute) {
      alpha[i] += omega[i].cross(qdi * z) + qddi * z;
      omega[i] += qdi * z;
    } else if (k >= 0 && s.joint->kind == JointKind::prismatic) {
      acc[i] += 2.0 * omega[i].cross(qdi * z) + qddi * z;
    }
  }

  std::vector<Eigen::Vector3d> force(n, Eigen::Vector3d::Zero());
  std::vector<Eigen::Vector3d> torque(n, Eigen::Vector3d::Zero());
  Configuration tau = Configuration::Zero(m.dof());

  for (std::size_t idx = n; idx-- > 0;) {
    const Segment& s = segments[idx];
    const Eigen::Vector3d a_com =
        acc[idx] + alpha[idx].cross(s.com) + omega[idx].cross(omega[idx].cross(s.com));
    const Eigen::Vector3d f_own = s.mass * a_com;
    const Eigen::Vector3d n_own =
        s.inertia * alpha[idx] + omega[idx].cross(s.inertia * omega[idx]);
    force[idx] += f_own;
    torque[idx] += n_own + s.com.cross(f_own);

    const int k = coord[idx];
    if (k >= 0) {
      const double s_axis = s.joint->axis_sign;
      tau[k] = s_axis * (s.joint->kind == JointKind::revolute ? torque[idx].dot(z)
                                                              : force[idx].dot(z));
    }
    if (s.parent >= 0) {
      force[s.parent] += rot[idx] * force[idx];
      torque[s.parent] += rot[idx] * torque[idx] + pos[idx].cross(rot[idx] * force[idx]);
    }
  }
  return tau;
}

namespace collide {

struct WorldShape {
  ShapeKind kind;
  Transform pose;  // world pose of the primitive frame
  Eigen::Vector3d half;  // box half extents
  double radius = 0.0;
  double length = 0.0;
};

WorldShape resolve(const Geometry& g, const Transform& owner_pose) {
  WorldShape w;
  w.kind = g.shape;
  w.pose = owner_pose * g.pose;
  w.half = g.size / 2.0;
  w.radius = g.radius;
  w.length = g.length;
  return w;
}

double point_box_sq_distance(const Eigen::Vector3d& p, const WorldShape& box) {
  const Eigen::Vector3d local = box.pose.inverse().apply(p);
  const Eigen::Vector3d clamped = local.cwiseMax(-box.half).cwiseMin(box.half);
  return (local - clamped).squaredNorm();
}

/// Endpoints of a cylinder axis in world coordinates.
void cylinder_segment(const WorldShape& c, Eigen::Vector3d* a, Eigen::Vector3d* b) {
  const Eigen::Vector3d axis = c.pose.rotation().col(2) * (c.length / 2.0);
  *a = c.pose.translation() - axis;
  *b = c.pose.translation() + axis;
}

double segment_segment_distance(const Eigen::Vector3d& p1, const Eigen::Vector3d& q1,
                                const Eigen::Vector3d& p2, const Eigen::Vector3d& q2) {
  // Closest points between segments (Ericson, Real-Time Collision Detection).
  const Eigen::Vector3d d1 = q1 - p1;
  const Eigen::Vector3d d2 = q2 - p2;
  const Eigen::Vector3d r = p1 - p2;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  double s = 0.0, t = 0.0;
  constexpr double kEps = 1e-12;
  if (a <= kEps && e <= kEps) {
    return r.norm();
  }
  if (a <= kEps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= kEps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      if (denom > kEps) {
        s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
      }
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p1 + d1 * s) - (p2 + d2 * t)).norm();
}

double segment_box_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                            const WorldShape& box) {
  // dist^2(seg(t), box) is convex in t; golden-section search is global.
  constexpr double kPhi = 0.6180339887498949;
  double lo = 0.0, hi = 1.0;
  double x1 = hi - kPhi * (hi - lo);
  double x2 = lo + kPhi * (hi - lo);
  auto f = [&](double t) { return point_box_sq_distance(a + t * (b - a), box); };
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < 80; ++i) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kPhi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kPhi * (hi - lo);
      f2 = f(x2);
    }
  }
  return std::sqrt(std::min(f1, f2));
}

bool boxes_intersect(const WorldShape& a, const WorldShape& b) {
  // Separating-axis test over 15 candidate axes (Ericson 4.4.1).
  const Eigen::Matrix3d ra = a.pose.rotation();
  const Eigen::Matrix3d rb = b.pose.rotation();
  const Eigen::Matrix3d r = ra.transpose() * rb;
  const Eigen::Matrix3d abs_r = r.cwiseAbs() + Eigen::Matrix3d::Constant(1e-12);
  const Eigen::Vector3d t = ra.transpose() * (b.pose.translation() - a.pose.translation());

  for (int i = 0; i < 3; ++i) {
    if (std::abs(t[i]) > a.half[i] + abs_r.row(i).dot(b.half)) return false;
  }
  for (int i = 0; i < 3; ++i) {
    if (std::abs(t.dot(r.col(i))) > abs_r.col(i).dot(a.half) + b.half[i]) return false;
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
      const int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
      const double lhs = std::abs(t[i2] * r(i1, j) - t[i1] * r(i2, j));
      const double rhs = a.half[i1] * abs_r(i2, j) + a.half[i2] * abs_r(i1, j) +
                         b.half[j1] * abs_r(i, j2) + b.half[j2] * abs_r(i, j1);
      if (lhs > rhs) return false;
    }
  }
  return true;
}

bool sphere_cylinder_intersect(const WorldShape& sphere, const WorldShape& cyl) {
  const Eigen::Vector3d local = cyl.pose.inverse().apply(sphere.pose.translation());
  const double radial = std::max(std::hypot(local[0], local[1]) - cyl.radius, 0.0);
  const double axial = std::max(std::abs(local[2]) - cyl.length / 2.0, 0.0);
  return std::hypot(radial, axial) <= sphere.radius;
}

bool intersects(const WorldShape& a, const WorldShape& b) {
  if (a.kind == ShapeKind::mesh || b.kind == ShapeKind::mesh) return false;
  if (a.kind > b.kind) return intersects(b, a);  // box < cylinder < sphere

  if (a.kind == ShapeKind::sphere) {  // sphere-sphere
    return (a.pose.translation() - b.pose.translation()).norm() <= a.radius + b.radius;
  }
  if (a.kind == ShapeKind::cylinder && b.kind == ShapeKind::sphere) {
    return sphere_cylinder_intersect(b, a);
  }
  if (a.kind == ShapeKind::cylinder && b.kind == ShapeKind::cylinder) {
    // Capsule-capsule over-approximation.
    Eigen::Vector3d a0, a1, b0, b1;
    cylinder_segment(a, &a0, &a1);
    cylinder_segment(b, &b0, &b1);
    return segment_segment_distance(a0, a1, b0, b1) <= a.radius + b.radius;
  }
  if (a.kind == ShapeKind::box && b.kind == ShapeKind::sphere) {
    return point_box_sq_distance(b.pose.translation(), a) <= b.radius * b.radius;
  }
  if (a.kind == ShapeKind::box && b.kind == ShapeKind::cylinder) {
    // Capsule over-approximation of the cylinder.
    Eigen::Vector3d b0, b1;
    cylinder_segment(b, &b0, &b1);
    return segment_box_distance(b0, b1, a) <= b.radius;
  }
  return boxes_intersect(a, b);
}

}  // namespace collide

bool collision_free(const RobotModel& m, const Configuration& q,
                    std::span<const PlacedShape> obstacles) {
  const std::vector<Transform> world = m.segment_poses(q);

  std::vector<std::pair<int, collide::WorldShape>> robot_shapes;
  for (std::size_t i = 0; i < m.segments().size(); ++i) {
    for (const Geometry& g : m.segments()[i].collisions) {
      if (g.shape == ShapeKind::mesh) continue;
      robot_shapes.emplace_back(static_cast<int>(i), collide::resolve(g, world[i]));
    }
  }

  for (const PlacedShape& obstacle : obstacles) {
    if (obstacle.geometry.shape == ShapeKind::mesh) continue;
    const collide::WorldShape w = collide::resolve(obstacle.geometry, obstacle.pose);
    for (const auto& [seg, shape] : robot_shapes) {
      if (collide::intersects(shape, w)) return false;
    }
  }

  for (std::size_t i = 0; i < robot_shapes.size(); ++i) {
    for (std::size_t j = i + 1; j < robot_shapes.size(); ++j) {
      const int seg_i = robot_shapes[i].first;
      const int seg_j = robot_shapes[j].first;
      if (seg_i == seg_j || m.collision_exempt(seg_i, seg_j)) continue;
      if (collide::intersects(robot_shapes[i].second, robot_shapes[j].second)) return false;
    }
  }
  return true;
}

Configuration random_configuration(const RobotModel& m, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  Configuration q(m.dof());
  for (int k = 0; k < m.dof(); ++k) {
    const JointLimits& l = m.limits(k);
    q[k] = std::uniform_real_distribution<double>(l.pos_min, l.pos_max)(rng);
  }
  return q;
}

Trajectory linear_trajectory(const Configuration& q0, const Configuration& q1, int steps,
                             double dt) {
  if (q0.size() != q1.size()) {
    throw std::invalid_argument("trajectory endpoints have mismatched dimensions");
  }
  if (steps < 2) throw std::invalid_argument("trajectory requires at least 2 steps");
  if (dt <= 0.0) throw std::invalid_argument("trajectory timestep must be positive");
  Trajectory t;
  t.dt = dt;
  t.configurations.reserve(static_cast<std::size_t>(steps));
  for (int k = 0; k < steps; ++k) {
    const double u = static_cast<double>(k) / (steps - 1);
    t.configurations.push_back(q0 + u * (q1 - q0));
  }
  return t;
}

std::string write_trajectory_csv(const Trajectory& t) {
  std::ostringstream os;
  os << "t";
  const Eigen::Index n = t.configurations.empty() ? 0 : t.configurations.front().size();
  for (Eigen::Index i = 0; i < n; ++i) os << ",q" << i;
  os << "\n";
  char buf[32];
  for (std::size_t k = 0; k < t.configurations.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.12g", k * t.dt);
    os << buf;
    for (Eigen::Index i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof(buf), "%.12g", t.configurations[k][i]);
      os << "," << buf;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace modforge
