#pragma once

#include "modforge/kinematics.hpp"

namespace modforge {

struct Obstacle {
  std::string id;
  Geometry shape;  // primitive; dimensions in meters
  Pose pose;       // world frame
};

struct Goal {
  std::string id;
  std::string kind = "reach";
  Pose pose;
  double pos_tolerance = 0.0;  // m
  double rot_tolerance = 0.0;  // rad
};

/// Static obstacles plus an ordered list of reach goals, with the base pose
/// assemblies are mounted at when evaluated against this task.
struct Task {
  std::string id;
  Pose base_pose;
  std::vector<Obstacle> obstacles;
  std::vector<Goal> goals;
};

Task parse_task(const std::string& text);
std::string serialize_task(const Task& t);

struct EvaluationMetrics {
  int module_count = 0;
  int joint_count = 0;
  int trajectory_steps = 0;
};

struct EvaluationOutcome {
  bool feasible = false;
  std::vector<Configuration> goal_solutions;  // one per solved goal
  std::optional<Trajectory> trajectory;       // present when feasible
  EvaluationMetrics metrics;
};

struct EvaluateOptions {
  std::uint64_t rng_seed = 0;
  int trajectory_steps = 100;  // per consecutive goal pair
  double dt = 0.1;
  IkOptions ik;
};

/// Evaluates one assembly against a task: solves IK per goal in order
/// (each goal seeding the next), then joins consecutive solutions by a
/// straight joint-space trajectory and collision-checks every waypoint
/// against the obstacles and the robot itself. Goal residuals must also
/// meet the per-goal tolerances. Infeasibility is an outcome, not a fault;
/// the evaluation is deterministic for a fixed rng_seed.
EvaluationOutcome evaluate_assembly(const Assembly& a, const Task& t,
                                    const EvaluateOptions& opts = {});

}  // namespace modforge
