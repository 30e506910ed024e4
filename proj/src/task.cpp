#include "modforge/task.hpp"

#include <iostream>

#include "json_util.hpp"

namespace modforge {

using detail::json;

Task parse_task(const std::string& text) {
  const json doc = detail::parse_document(text);
  Task t;
  t.id = detail::require_string(doc, "", "id");
  if (auto it = doc.find("basePose"); it != doc.end()) {
    t.base_pose = detail::parse_transform(*it, "/basePose");
  }
  const json& obstacles = detail::require_array(doc, "", "obstacles");
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const std::string path = "/obstacles/" + std::to_string(i);
    Obstacle o;
    o.id = detail::require_string(obstacles[i], path, "id");
    o.shape = detail::parse_geometry(detail::require_field(obstacles[i], path, "shape"),
                                     path + "/shape");
    o.pose = detail::parse_transform(detail::require_field(obstacles[i], path, "pose"),
                                     path + "/pose");
    t.obstacles.push_back(std::move(o));
  }
  const json& goals = detail::require_array(doc, "", "goals");
  std::set<std::string> goal_ids;
  for (std::size_t i = 0; i < goals.size(); ++i) {
    const std::string path = "/goals/" + std::to_string(i);
    Goal g;
    g.id = detail::require_string(goals[i], path, "id");
    g.kind = detail::require_string(goals[i], path, "kind");
    if (g.kind != "reach") {
      throw ParseError(path + "/kind", "unsupported goal kind '" + g.kind +
                                           "'; only \"reach\" goals are supported");
    }
    g.pose = detail::parse_transform(detail::require_field(goals[i], path, "pose"),
                                     path + "/pose");
    g.pos_tolerance = detail::require_number(goals[i], path, "posTol");
    g.rot_tolerance = detail::require_number(goals[i], path, "rotTol");
    if (g.pos_tolerance <= 0.0 || g.rot_tolerance <= 0.0) {
      throw ValidationError("goal '" + g.id + "' tolerances must be positive",
                            {{"bad-tolerance", path, "tolerances must be positive"}});
    }
    if (!goal_ids.insert(g.id).second) {
      throw ValidationError("duplicate goal id '" + g.id + "'",
                            {{"duplicate-id", path, "duplicate goal id"}});
    }
    t.goals.push_back(std::move(g));
  }
  // Pose goals and static obstacles are the supported constraint set; other
  // entries are accepted but have no effect on feasibility.
  if (auto it = doc.find("constraints"); it != doc.end() && !it->empty()) {
    std::cerr << "warning: task '" << t.id << "' carries " << it->size()
              << " constraint(s); only pose goals and static obstacles affect feasibility\n";
  }
  return t;
}

std::string serialize_task(const Task& t) {
  json doc;
  doc["id"] = t.id;
  doc["basePose"] = detail::transform_to_json(t.base_pose);
  json obstacles = json::array();
  for (const Obstacle& o : t.obstacles) {
    json oj;
    oj["id"] = o.id;
    oj["shape"] = detail::geometry_to_json(o.shape);
    oj["pose"] = detail::transform_to_json(o.pose);
    obstacles.push_back(oj);
  }
  doc["obstacles"] = obstacles;
  json goals = json::array();
  for (const Goal& g : t.goals) {
    json gj;
    gj["id"] = g.id;
    gj["kind"] = g.kind;
    gj["pose"] = detail::transform_to_json(g.pose);
    gj["posTol"] = g.pos_tolerance;
    gj["rotTol"] = g.rot_tolerance;
    goals.push_back(gj);
  }
  doc["goals"] = goals;
  return doc.dump(2) + "\n";
}

EvaluationOutcome evaluate_assembly(const Assembly& a, const Task& t,
                                    const EvaluateOptions& opts) {
  EvaluationOutcome outcome;
  outcome.metrics.module_count = static_cast<int>(a.instances().size());
  outcome.metrics.joint_count = a.degrees_of_freedom();

  RobotModel model = to_robot_model(a, t.base_pose);
  if (model.eef_frame().empty()) {
    return outcome;  // nothing to aim with
  }

  std::vector<PlacedShape> obstacles;
  obstacles.reserve(t.obstacles.size());
  for (const Obstacle& o : t.obstacles) {
    obstacles.push_back({o.shape, o.pose});
  }

  Configuration seed = Configuration::Zero(model.dof());
  for (std::size_t k = 0; k < t.goals.size(); ++k) {
    const Goal& goal = t.goals[k];
    IkOptions ik_opts = opts.ik;
    ik_opts.rng_seed = opts.rng_seed * 0x9e3779b97f4a7c15ULL + k + 1;
    IkResult result = ik(model, goal.pose, seed, ik_opts);
    if (!result.success || result.pos_residual > goal.pos_tolerance ||
        result.rot_residual > goal.rot_tolerance) {
      return outcome;
    }
    outcome.goal_solutions.push_back(result.q);
    seed = result.q;
  }

  Trajectory trajectory;
  trajectory.dt = opts.dt;
  if (outcome.goal_solutions.size() <= 1) {
    if (!outcome.goal_solutions.empty()) {
      trajectory.configurations.push_back(outcome.goal_solutions.front());
    }
  } else {
    for (std::size_t k = 0; k + 1 < outcome.goal_solutions.size(); ++k) {
      Trajectory leg = linear_trajectory(outcome.goal_solutions[k],
                                         outcome.goal_solutions[k + 1],
                                         opts.trajectory_steps, opts.dt);
      const std::size_t skip = k == 0 ? 0 : 1;  // shared waypoint between legs
      trajectory.configurations.insert(trajectory.configurations.end(),
                                       leg.configurations.begin() + skip,
                                       leg.configurations.end());
    }
  }

  for (const Configuration& waypoint : trajectory.configurations) {
    if (!collision_free(model, waypoint, obstacles)) {
      return outcome;
    }
  }
  if (trajectory.configurations.empty() &&
      !collision_free(model, Configuration::Zero(model.dof()), obstacles)) {
    return outcome;
  }

  outcome.feasible = true;
  outcome.metrics.trajectory_steps = static_cast<int>(trajectory.configurations.size());
  outcome.trajectory = std::move(trajectory);
  return outcome;
}

}  // namespace modforge
