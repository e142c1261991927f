#include "retarget/hand_model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace retarget {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr double kUnitTolerance = 1e-9;

[[noreturn]] void fail(ModelErrc code, const std::string& message) {
  throw ModelError(code, message);
}

template <typename Range>
void require_unique(const Range& items, const char* kind) {
  std::set<std::string> seen;
  for (const auto& item : items) {
    if (item.name.empty()) fail(ModelErrc::schema, std::string(kind) + " with empty name");
    if (!seen.insert(item.name).second) {
      fail(ModelErrc::duplicate_name, std::string("duplicate ") + kind + " '" + item.name + "'");
    }
  }
}

}  // namespace

std::string_view to_string(JointKind kind) {
  return kind == JointKind::revolute ? "revolute" : "fixed";
}

std::string_view to_string(FingerRole role) {
  switch (role) {
    case FingerRole::thumb: return "thumb";
    case FingerRole::primary: return "primary";
    case FingerRole::other: return "other";
  }
  return "other";
}

std::string_view to_string(ModelErrc code) {
  switch (code) {
    case ModelErrc::syntax: return "syntax";
    case ModelErrc::schema: return "schema";
    case ModelErrc::duplicate_name: return "duplicate_name";
    case ModelErrc::dangling_reference: return "dangling_reference";
    case ModelErrc::cycle: return "cycle";
    case ModelErrc::multiple_parents: return "multiple_parents";
    case ModelErrc::multiple_roots: return "multiple_roots";
    case ModelErrc::non_unit_axis: return "non_unit_axis";
    case ModelErrc::inverted_limits: return "inverted_limits";
    case ModelErrc::missing_frame: return "missing_frame";
    case ModelErrc::bad_coupling: return "bad_coupling";
  }
  return "unknown";
}

ModelError::ModelError(ModelErrc code, const std::string& message,
                       std::optional<std::size_t> position)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code),
      position_(position) {}

bool Joint::operator==(const Joint& o) const {
  const bool same_coupling =
      coupled_to.has_value() == o.coupled_to.has_value() &&
      (!coupled_to || (coupled_to->master == o.coupled_to->master &&
                       coupled_to->ratio == o.coupled_to->ratio));
  return name == o.name && kind == o.kind && parent == o.parent && child == o.child &&
         origin_xyz == o.origin_xyz && origin_rpy == o.origin_rpy && axis == o.axis &&
         limits.lower == o.limits.lower && limits.upper == o.limits.upper && same_coupling;
}

bool NamedFrame::operator==(const NamedFrame& o) const {
  return name == o.name && link == o.link && offset_xyz == o.offset_xyz &&
         offset_rpy == o.offset_rpy;
}

HandModel::HandModel(std::string name, std::vector<Link> links, std::vector<Joint> joints,
                     std::vector<NamedFrame> frames, std::vector<FingerSpec> fingers)
    : name_(std::move(name)), links_(std::move(links)), joints_(std::move(joints)),
      frames_(std::move(frames)), fingers_(std::move(fingers)) {
  if (links_.empty()) fail(ModelErrc::schema, "model has no links");
  require_unique(links_, "link");
  require_unique(joints_, "joint");
  require_unique(frames_, "frame");
  require_unique(fingers_, "finger");

  for (std::size_t i = 0; i < links_.size(); ++i) link_lookup_.emplace(links_[i].name, i);

  std::vector<std::size_t> parent_joint(links_.size(), npos);
  for (std::size_t j = 0; j < joints_.size(); ++j) {
    const Joint& joint = joints_[j];
    if (!link_lookup_.contains(joint.parent)) {
      fail(ModelErrc::dangling_reference,
           "joint '" + joint.name + "' parent link '" + joint.parent + "' is not declared");
    }
    if (!link_lookup_.contains(joint.child)) {
      fail(ModelErrc::dangling_reference,
           "joint '" + joint.name + "' child link '" + joint.child + "' is not declared");
    }
    if (!joint.origin_xyz.allFinite() || !joint.origin_rpy.allFinite()) {
      fail(ModelErrc::schema, "joint '" + joint.name + "' has a non-finite origin");
    }
    if (joint.kind == JointKind::revolute) {
      if (!joint.axis.allFinite() || std::abs(joint.axis.norm() - 1.0) > kUnitTolerance) {
        fail(ModelErrc::non_unit_axis, "joint '" + joint.name + "' axis is not unit length");
      }
      if (!std::isfinite(joint.limits.lower) || !std::isfinite(joint.limits.upper)) {
        fail(ModelErrc::schema, "joint '" + joint.name + "' has non-finite limits");
      }
      if (joint.limits.lower > joint.limits.upper) {
        fail(ModelErrc::inverted_limits, "joint '" + joint.name + "' lower limit exceeds upper");
      }
      dof_lookup_.emplace(joint.name, dof_joints_.size());
      dof_joints_.push_back(j);
    }
    const std::size_t child = link_lookup_.at(joint.child);
    if (parent_joint[child] != npos) {
      fail(ModelErrc::multiple_parents, "link '" + joint.child + "' has more than one parent joint");
    }
    parent_joint[child] = j;
  }

  std::vector<std::size_t> roots;
  for (std::size_t l = 0; l < links_.size(); ++l) {
    if (parent_joint[l] == npos) roots.push_back(l);
  }
  if (roots.empty()) fail(ModelErrc::cycle, "no root link; the joint graph contains a cycle");
  if (roots.size() > 1) {
    fail(ModelErrc::multiple_roots,
         "links '" + links_[roots[0]].name + "' and '" + links_[roots[1]].name +
             "' both lack a parent joint");
  }
  root_ = roots.front();

  // Breadth-first from the root; any link not reached sits on a cycle.
  std::vector<std::vector<std::size_t>> children(links_.size());
  for (std::size_t j = 0; j < joints_.size(); ++j) {
    children[link_lookup_.at(joints_[j].parent)].push_back(j);
  }
  const std::size_t n_dof = dof_joints_.size();
  link_dof_mask_.assign(links_.size() * n_dof, false);
  std::vector<bool> reached(links_.size(), false);
  reached[root_] = true;
  std::deque<std::size_t> frontier{root_};
  while (!frontier.empty()) {
    const std::size_t link = frontier.front();
    frontier.pop_front();
    for (std::size_t j : children[link]) {
      const Joint& joint = joints_[j];
      const std::size_t child = link_lookup_.at(joint.child);
      const std::size_t dof =
          joint.kind == JointKind::revolute ? dof_lookup_.at(joint.name) : npos;
      traversal_.push_back({j, link, child, dof, joint.origin()});
      for (std::size_t d = 0; d < n_dof; ++d) {
        link_dof_mask_[child * n_dof + d] = link_dof_mask_[link * n_dof + d];
      }
      if (dof != npos) link_dof_mask_[child * n_dof + dof] = true;
      reached[child] = true;
      frontier.push_back(child);
    }
  }
  for (std::size_t l = 0; l < links_.size(); ++l) {
    if (!reached[l]) fail(ModelErrc::cycle, "link '" + links_[l].name + "' lies on a cycle");
  }

  for (std::size_t f = 0; f < frames_.size(); ++f) {
    const NamedFrame& frame = frames_[f];
    const auto it = link_lookup_.find(frame.link);
    if (it == link_lookup_.end()) {
      fail(ModelErrc::dangling_reference,
           "frame '" + frame.name + "' attaches to undeclared link '" + frame.link + "'");
    }
    if (!frame.offset_xyz.allFinite() || !frame.offset_rpy.allFinite()) {
      fail(ModelErrc::schema, "frame '" + frame.name + "' has a non-finite offset");
    }
    frame_lookup_.emplace(frame.name, f);
    frame_links_.push_back(it->second);
    frame_offsets_.push_back(frame.offset());
  }

  for (const FingerSpec& finger : fingers_) {
    if (!frame_lookup_.contains(finger.tip_frame)) {
      fail(ModelErrc::missing_frame,
           "finger '" + finger.name + "' references missing frame '" + finger.tip_frame + "'");
    }
  }

  for (const Joint& joint : joints_) {
    if (!joint.coupled_to) continue;
    const Coupling& c = *joint.coupled_to;
    if (joint.kind != JointKind::revolute) {
      fail(ModelErrc::bad_coupling, "fixed joint '" + joint.name + "' cannot be coupled");
    }
    const auto master = dof_lookup_.find(c.master);
    if (master == dof_lookup_.end()) {
      fail(ModelErrc::bad_coupling,
           "joint '" + joint.name + "' is coupled to unknown revolute joint '" + c.master + "'");
    }
    if (c.master == joint.name || dof_joint(master->second).coupled_to) {
      fail(ModelErrc::bad_coupling, "joint '" + joint.name + "' coupling master is itself coupled");
    }
    if (!std::isfinite(c.ratio) || c.ratio == 0.0) {
      fail(ModelErrc::bad_coupling, "joint '" + joint.name + "' has an invalid coupling ratio");
    }
  }
}

std::vector<std::string> HandModel::dof_names() const {
  std::vector<std::string> names;
  names.reserve(dof());
  for (std::size_t j : dof_joints_) names.push_back(joints_[j].name);
  return names;
}

std::size_t HandModel::link_index(std::string_view name) const {
  const auto it = link_lookup_.find(std::string(name));
  return it == link_lookup_.end() ? npos : it->second;
}

std::size_t HandModel::frame_index(std::string_view name) const {
  const auto it = frame_lookup_.find(std::string(name));
  return it == frame_lookup_.end() ? npos : it->second;
}

std::size_t HandModel::dof_index(std::string_view joint_name) const {
  const auto it = dof_lookup_.find(std::string(joint_name));
  return it == dof_lookup_.end() ? npos : it->second;
}

std::size_t HandModel::require_frame(std::string_view name) const {
  const std::size_t idx = frame_index(name);
  if (idx == npos) throw UnknownFrameError(std::string(name));
  return idx;
}

const FingerSpec* HandModel::finger(std::string_view name) const {
  for (const FingerSpec& f : fingers_) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

const FingerSpec* HandModel::finger_by_tip(std::string_view tip_frame) const {
  for (const FingerSpec& f : fingers_) {
    if (f.tip_frame == tip_frame) return &f;
  }
  return nullptr;
}

Eigen::VectorXd HandModel::lower_limits() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(dof()));
  for (std::size_t d = 0; d < dof(); ++d) v[static_cast<Eigen::Index>(d)] = dof_joint(d).limits.lower;
  return v;
}

Eigen::VectorXd HandModel::upper_limits() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(dof()));
  for (std::size_t d = 0; d < dof(); ++d) v[static_cast<Eigen::Index>(d)] = dof_joint(d).limits.upper;
  return v;
}

bool HandModel::operator==(const HandModel& o) const {
  return name_ == o.name_ && links_ == o.links_ && joints_ == o.joints_ && frames_ == o.frames_ &&
         fingers_ == o.fingers_;
}

void check_joint_vector(const HandModel& model, const JointVector& q) {
  check_dimension("joint vector", model.dof(), q.size());
  if (!q.model.empty() && q.model != model.name()) {
    throw std::invalid_argument("joint vector for model '" + q.model + "' used with model '" +
                                model.name() + "'");
  }
}

// ---------------------------------------------------------------------------
// JSON model format

namespace {

Vec3 read_vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) fail(ModelErrc::schema, where + " must be a 3-element array");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) fail(ModelErrc::schema, where + " must be numeric");
    v[i] = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) fail(ModelErrc::schema, where + " must be an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(ModelErrc::schema, where + " is missing '" + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_string()) fail(ModelErrc::schema, where + "." + key + " must be a string");
  return v.get<std::string>();
}

double require_number(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number()) fail(ModelErrc::schema, where + "." + key + " must be a number");
  return v.get<double>();
}

void read_origin(const json& obj, const std::string& where, Vec3& xyz, Vec3& rpy) {
  const auto it = obj.find("origin");
  if (it == obj.end()) return;
  if (!it->is_object()) fail(ModelErrc::schema, where + ".origin must be an object");
  if (it->contains("xyz")) xyz = read_vec3((*it)["xyz"], where + ".origin.xyz");
  if (it->contains("rpy")) rpy = read_vec3((*it)["rpy"], where + ".origin.rpy");
}

const json& require_array(const json& root, const char* key) {
  const json& v = require(root, key, "model");
  if (!v.is_array()) fail(ModelErrc::schema, std::string("model.") + key + " must be an array");
  return v;
}

ordered_json vec_json(const Vec3& v) { return ordered_json::array({v.x(), v.y(), v.z()}); }

ordered_json origin_json(const Vec3& xyz, const Vec3& rpy) {
  ordered_json o;
  o["xyz"] = vec_json(xyz);
  o["rpy"] = vec_json(rpy);
  return o;
}

}  // namespace

HandModel parse_model(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ModelError(ModelErrc::syntax, e.what(), e.byte);
  }
  if (!root.is_object()) fail(ModelErrc::schema, "model must be a JSON object");

  const std::string name = require_string(root, "name", "model");

  std::vector<Link> links;
  for (const json& l : require_array(root, "links")) {
    links.push_back({require_string(l, "name", "link")});
  }

  std::vector<Joint> joints;
  for (const json& j : require_array(root, "joints")) {
    Joint joint;
    joint.name = require_string(j, "name", "joint");
    const std::string where = "joint '" + joint.name + "'";
    const std::string type = require_string(j, "type", where);
    if (type == "revolute") {
      joint.kind = JointKind::revolute;
    } else if (type == "fixed") {
      joint.kind = JointKind::fixed;
    } else {
      fail(ModelErrc::schema, where + " has unknown type '" + type + "'");
    }
    joint.parent = require_string(j, "parent", where);
    joint.child = require_string(j, "child", where);
    read_origin(j, where, joint.origin_xyz, joint.origin_rpy);
    if (joint.kind == JointKind::revolute) {
      joint.axis = read_vec3(require(j, "axis", where), where + ".axis");
      const json& lim = require(j, "limits", where);
      joint.limits.lower = require_number(lim, "lower", where + ".limits");
      joint.limits.upper = require_number(lim, "upper", where + ".limits");
      if (const auto c = j.find("coupled_to"); c != j.end()) {
        Coupling coupling;
        coupling.master = require_string(*c, "joint", where + ".coupled_to");
        if (c->contains("ratio")) coupling.ratio = require_number(*c, "ratio", where + ".coupled_to");
        joint.coupled_to = coupling;
      }
    }
    joints.push_back(std::move(joint));
  }

  std::vector<NamedFrame> frames;
  for (const json& f : require_array(root, "frames")) {
    NamedFrame frame;
    frame.name = require_string(f, "name", "frame");
    frame.link = require_string(f, "link", "frame '" + frame.name + "'");
    read_origin(f, "frame '" + frame.name + "'", frame.offset_xyz, frame.offset_rpy);
    frames.push_back(std::move(frame));
  }

  std::vector<FingerSpec> fingers;
  if (root.contains("fingers")) {
    for (const json& f : require_array(root, "fingers")) {
      FingerSpec finger;
      finger.name = require_string(f, "name", "finger");
      finger.tip_frame = require_string(f, "tip", "finger '" + finger.name + "'");
      const std::string role = require_string(f, "role", "finger '" + finger.name + "'");
      if (role == "thumb") {
        finger.role = FingerRole::thumb;
      } else if (role == "primary") {
        finger.role = FingerRole::primary;
      } else if (role == "other") {
        finger.role = FingerRole::other;
      } else {
        fail(ModelErrc::schema, "finger '" + finger.name + "' has unknown role '" + role + "'");
      }
      fingers.push_back(std::move(finger));
    }
  }

  return HandModel(name, std::move(links), std::move(joints), std::move(frames), std::move(fingers));
}

HandModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

std::string serialize_model(const HandModel& model) {
  ordered_json root;
  root["name"] = model.name();

  ordered_json links = ordered_json::array();
  for (const Link& l : model.links()) links.push_back({{"name", l.name}});
  root["links"] = links;

  ordered_json joints = ordered_json::array();
  for (const Joint& j : model.joints()) {
    ordered_json o;
    o["name"] = j.name;
    o["type"] = to_string(j.kind);
    o["parent"] = j.parent;
    o["child"] = j.child;
    o["origin"] = origin_json(j.origin_xyz, j.origin_rpy);
    if (j.kind == JointKind::revolute) {
      o["axis"] = vec_json(j.axis);
      o["limits"] = {{"lower", j.limits.lower}, {"upper", j.limits.upper}};
      if (j.coupled_to) o["coupled_to"] = {{"joint", j.coupled_to->master}, {"ratio", j.coupled_to->ratio}};
    }
    joints.push_back(std::move(o));
  }
  root["joints"] = joints;

  ordered_json frames = ordered_json::array();
  for (const NamedFrame& f : model.frames()) {
    ordered_json o;
    o["name"] = f.name;
    o["link"] = f.link;
    o["origin"] = origin_json(f.offset_xyz, f.offset_rpy);
    frames.push_back(std::move(o));
  }
  root["frames"] = frames;

  ordered_json fingers = ordered_json::array();
  for (const FingerSpec& f : model.fingers()) {
    ordered_json o;
    o["name"] = f.name;
    o["tip"] = f.tip_frame;
    o["role"] = to_string(f.role);
    fingers.push_back(std::move(o));
  }
  root["fingers"] = fingers;

  return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Kinematics

KinematicState compute_kinematics(const HandModel& model,
                                  const Eigen::Ref<const Eigen::VectorXd>& q) {
  check_dimension("joint vector", model.dof(), static_cast<std::size_t>(q.size()));
  KinematicState state;
  state.links.assign(model.links().size(), Pose::identity());
  state.dof_axes.assign(model.dof(), Vec3::Zero());
  state.dof_points.assign(model.dof(), Vec3::Zero());
  for (const HandModel::Step& step : model.traversal()) {
    const Pose joint_frame = state.links[step.parent_link] * step.origin;
    if (step.dof == HandModel::npos) {
      state.links[step.child_link] = joint_frame;
      continue;
    }
    const Vec3& axis = model.joints()[step.joint].axis;
    const double angle = q[static_cast<Eigen::Index>(step.dof)];
    state.dof_axes[step.dof] = joint_frame.rotation * axis;
    state.dof_points[step.dof] = joint_frame.translation;
    state.links[step.child_link] = joint_frame * Pose::from_rotation(axis_angle(axis, angle));
  }
  return state;
}

std::map<std::string, Pose> forward_kinematics(const HandModel& model, const JointVector& q) {
  check_joint_vector(model, q);
  const KinematicState state = compute_kinematics(model, q.values);
  std::map<std::string, Pose> poses;
  for (std::size_t f = 0; f < model.frames().size(); ++f) {
    poses.emplace(model.frames()[f].name, state.frame_pose(model, f));
  }
  return poses;
}

Vec3 task_vector(const HandModel& model, const JointVector& q, std::string_view origin_frame,
                 std::string_view target_frame) {
  check_joint_vector(model, q);
  const std::size_t origin = model.require_frame(origin_frame);
  const std::size_t target = model.require_frame(target_frame);
  const KinematicState state = compute_kinematics(model, q.values);
  const Pose o = state.frame_pose(model, origin);
  const Pose t = state.frame_pose(model, target);
  return o.rotation.conjugate() * (t.translation - o.translation);
}

JointVector clamp_to_limits(const HandModel& model, const JointVector& q) {
  check_joint_vector(model, q);
  JointVector out{model.name(), q.values.cwiseMax(model.lower_limits()).cwiseMin(model.upper_limits())};
  return out;
}

}  // namespace retarget
