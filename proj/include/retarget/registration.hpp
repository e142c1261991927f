#pragma once

#include <json.hpp>

#include "retarget/pose.hpp"

namespace retarget {

/// Rigid transform from human-camera coordinates to robot base coordinates.
struct Registration {
  Pose transform;
};

/// T = robot_pose_0 · human_pose_0⁻¹. Throws std::invalid_argument on an invalid pose.
Registration compute_registration(const Pose& human_pose_0, const Pose& robot_pose_0);

/// T · human_pose.
Pose map_palm_pose(const Registration& registration, const Pose& human_pose);

/// Closed axis-aligned observation volume in robot base coordinates.
struct WorkspaceBounds {
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3(0.80, 0.55, 0.38);
};

enum class WorkspaceStatus { ok, out_of_volume };

/// Flags (never clamps) palm positions outside the volume; points on a face are inside.
WorkspaceStatus validate_workspace(const Pose& pose, const WorkspaceBounds& bounds);

/// Palm pose assumed for the robot when the stream registers.
struct RegistrationConfig {
  Pose robot_initial = Pose::identity();
  WorkspaceBounds workspace;
};

nlohmann::ordered_json to_json(const RegistrationConfig& config);
RegistrationConfig registration_config_from_json(const nlohmann::json& j);

}  // namespace retarget
