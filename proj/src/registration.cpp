#include "retarget/registration.hpp"

#include <stdexcept>

namespace retarget {

namespace {

constexpr double kPoseTol = 1e-9;

nlohmann::ordered_json vec3_json(const Vec3& v) { return nlohmann::ordered_json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument(std::string(what) + " must be a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

Registration compute_registration(const Pose& human_pose_0, const Pose& robot_pose_0) {
  if (!human_pose_0.is_valid(kPoseTol)) throw std::invalid_argument("invalid human registration pose");
  if (!robot_pose_0.is_valid(kPoseTol)) throw std::invalid_argument("invalid robot registration pose");
  return {robot_pose_0 * human_pose_0.inverse()};
}

Pose map_palm_pose(const Registration& registration, const Pose& human_pose) {
  return registration.transform * human_pose;
}

WorkspaceStatus validate_workspace(const Pose& pose, const WorkspaceBounds& bounds) {
  if (!(bounds.size.array() > 0.0).all()) throw std::invalid_argument("workspace bounds must be positive");
  const Vec3 offset = (pose.translation - bounds.center).cwiseAbs();
  return (offset.array() <= (0.5 * bounds.size).array()).all() ? WorkspaceStatus::ok : WorkspaceStatus::out_of_volume;
}

nlohmann::ordered_json to_json(const RegistrationConfig& config) {
  const Quat& q = config.robot_initial.rotation;
  nlohmann::ordered_json j;
  j["robot_initial"] = {{"q", nlohmann::ordered_json::array({q.w(), q.x(), q.y(), q.z()})},
                        {"p", vec3_json(config.robot_initial.translation)}};
  j["workspace_center"] = vec3_json(config.workspace.center);
  j["workspace_size"] = vec3_json(config.workspace.size);
  return j;
}

RegistrationConfig registration_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("registration config must be a JSON object");
  RegistrationConfig c;
  try {
    if (const auto it = j.find("robot_initial"); it != j.end()) {
      const auto& q = it->at("q");
      if (!q.is_array() || q.size() != 4) throw std::invalid_argument("robot_initial.q must have 4 entries");
      c.robot_initial.rotation = Quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
      c.robot_initial.translation = vec3_from(it->at("p"), "robot_initial.p");
    }
    if (const auto it = j.find("workspace_center"); it != j.end()) c.workspace.center = vec3_from(*it, "workspace_center");
    if (const auto it = j.find("workspace_size"); it != j.end()) c.workspace.size = vec3_from(*it, "workspace_size");
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("invalid registration config: ") + e.what());
  }
  if (!c.robot_initial.is_valid(1e-6)) throw std::invalid_argument("robot_initial must be a valid rigid pose");
  if (!(c.workspace.size.array() > 0.0).all()) throw std::invalid_argument("workspace_size must be positive");
  return c;
}

}  // namespace retarget
