#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "retarget/errors.hpp"
#include "retarget/pose.hpp"

namespace retarget {

enum class JointKind { revolute, fixed };
enum class FingerRole { thumb, primary, other };

std::string_view to_string(JointKind kind);
std::string_view to_string(FingerRole role);

struct JointLimits {
  double lower = 0.0;
  double upper = 0.0;
};

/// Follower joint value = ratio * master joint value.
struct Coupling {
  std::string master;
  double ratio = 1.0;
};

struct Joint {
  std::string name;
  JointKind kind = JointKind::fixed;
  std::string parent;
  std::string child;
  Vec3 origin_xyz = Vec3::Zero();
  Vec3 origin_rpy = Vec3::Zero();
  Vec3 axis = Vec3::UnitZ();
  JointLimits limits;
  std::optional<Coupling> coupled_to;

  Pose origin() const { return Pose::from_xyz_rpy(origin_xyz, origin_rpy); }
  bool operator==(const Joint&) const;
};

struct Link {
  std::string name;
  bool operator==(const Link&) const = default;
};

struct NamedFrame {
  std::string name;
  std::string link;
  Vec3 offset_xyz = Vec3::Zero();
  Vec3 offset_rpy = Vec3::Zero();

  Pose offset() const { return Pose::from_xyz_rpy(offset_xyz, offset_rpy); }
  bool operator==(const NamedFrame&) const;
};

struct FingerSpec {
  std::string name;
  std::string tip_frame;
  FingerRole role = FingerRole::other;
  bool operator==(const FingerSpec&) const = default;
};

enum class ModelErrc {
  syntax,
  schema,
  duplicate_name,
  dangling_reference,
  cycle,
  multiple_parents,
  multiple_roots,
  non_unit_axis,
  inverted_limits,
  missing_frame,
  bad_coupling,
};

std::string_view to_string(ModelErrc code);

/// Parse or validation failure for a hand model. `code()` is machine-readable; `position()`
/// is the byte offset for syntax errors.
class ModelError : public std::runtime_error {
 public:
  ModelError(ModelErrc code, const std::string& message, std::optional<std::size_t> position = {});

  ModelErrc code() const noexcept { return code_; }
  std::optional<std::size_t> position() const noexcept { return position_; }

 private:
  ModelErrc code_;
  std::optional<std::size_t> position_;
};

/// Articulated hand: a tree of links joined by revolute or fixed joints, rooted at the palm.
/// Immutable once built. Degrees of freedom are the revolute joints in declaration order.
class HandModel {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  /// Validates every invariant and throws ModelError on the first violation.
  HandModel(std::string name, std::vector<Link> links, std::vector<Joint> joints,
            std::vector<NamedFrame> frames, std::vector<FingerSpec> fingers);

  const std::string& name() const noexcept { return name_; }
  std::span<const Link> links() const noexcept { return links_; }
  std::span<const Joint> joints() const noexcept { return joints_; }
  std::span<const NamedFrame> frames() const noexcept { return frames_; }
  std::span<const FingerSpec> fingers() const noexcept { return fingers_; }

  std::size_t dof() const noexcept { return dof_joints_.size(); }
  const std::string& root_link() const { return links_[root_].name; }

  /// Joint (by index into joints()) driven by degree of freedom `dof_index`.
  const Joint& dof_joint(std::size_t dof_index) const { return joints_[dof_joints_[dof_index]]; }
  std::vector<std::string> dof_names() const;

  std::size_t link_index(std::string_view name) const;
  std::size_t frame_index(std::string_view name) const;
  std::size_t dof_index(std::string_view joint_name) const;
  /// Like frame_index but throws UnknownFrameError.
  std::size_t require_frame(std::string_view name) const;

  const FingerSpec* finger(std::string_view name) const;
  const FingerSpec* finger_by_tip(std::string_view tip_frame) const;

  Eigen::VectorXd lower_limits() const;
  Eigen::VectorXd upper_limits() const;

  // Compiled traversal data used by kinematics.
  struct Step {
    std::size_t joint;
    std::size_t parent_link;
    std::size_t child_link;
    std::size_t dof;  // npos for fixed joints
    Pose origin;
  };
  std::span<const Step> traversal() const noexcept { return traversal_; }
  std::size_t frame_link(std::size_t frame) const { return frame_links_[frame]; }
  const Pose& frame_offset(std::size_t frame) const { return frame_offsets_[frame]; }
  /// True when degree of freedom `dof` lies on the root path of link `link`.
  bool moves_link(std::size_t dof, std::size_t link) const {
    return link_dof_mask_[link * dof_joints_.size() + dof];
  }

  bool operator==(const HandModel& other) const;

 private:
  std::string name_;
  std::vector<Link> links_;
  std::vector<Joint> joints_;
  std::vector<NamedFrame> frames_;
  std::vector<FingerSpec> fingers_;

  std::size_t root_ = 0;
  std::vector<std::size_t> dof_joints_;
  std::vector<Step> traversal_;
  std::vector<std::size_t> frame_links_;
  std::vector<Pose> frame_offsets_;
  std::vector<bool> link_dof_mask_;
  std::unordered_map<std::string, std::size_t> link_lookup_;
  std::unordered_map<std::string, std::size_t> frame_lookup_;
  std::unordered_map<std::string, std::size_t> dof_lookup_;
};

/// Joint angles in radians, bound by name to the model they were produced for.
struct JointVector {
  std::string model;
  Eigen::VectorXd values;

  static JointVector zeros(const HandModel& model) {
    return {model.name(), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.dof()))};
  }
  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

/// Throws DimensionError if `q` does not fit `model`, and std::invalid_argument if it names
/// a different model.
void check_joint_vector(const HandModel& model, const JointVector& q);

HandModel parse_model(std::string_view text);
HandModel load_model(const std::string& path);
/// JSON text with keys in schema order; parse_model(serialize_model(m)) == m.
std::string serialize_model(const HandModel& model);

// ---------------------------------------------------------------------------
// Kinematics

/// World (root-link) poses of every link plus the world axis and anchor point of every
/// degree of freedom, for one joint configuration.
struct KinematicState {
  std::vector<Pose> links;
  std::vector<Vec3> dof_axes;
  std::vector<Vec3> dof_points;

  Pose frame_pose(const HandModel& model, std::size_t frame) const {
    return links[model.frame_link(frame)] * model.frame_offset(frame);
  }
};

/// Fast path over a raw vector; `q.size()` must equal model.dof().
KinematicState compute_kinematics(const HandModel& model, const Eigen::Ref<const Eigen::VectorXd>& q);

/// Pose of every named frame in root coordinates.
std::map<std::string, Pose> forward_kinematics(const HandModel& model, const JointVector& q);

/// Displacement from `origin_frame` to `target_frame`, expressed in origin-frame coordinates.
Vec3 task_vector(const HandModel& model, const JointVector& q, std::string_view origin_frame,
                 std::string_view target_frame);

/// Componentwise clamp into joint limits.
JointVector clamp_to_limits(const HandModel& model, const JointVector& q);

}  // namespace retarget
