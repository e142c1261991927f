#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace retarget {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Rigid transform: unit quaternion rotation followed by a translation in meters.
/// Poses compose left to right, so `a * b` maps b's frame into a's parent frame.
struct Pose {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  Pose() = default;
  Pose(const Quat& q, const Vec3& t) : rotation(q), translation(t) {}

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t) { return {Quat::Identity(), t}; }
  static Pose from_rotation(const Quat& q) { return {q, Vec3::Zero()}; }

  /// Fixed-axis roll/pitch/yaw (R = Rz(yaw) * Ry(pitch) * Rx(roll)), URDF convention.
  static Pose from_xyz_rpy(const Vec3& xyz, const Vec3& rpy);

  Pose operator*(const Pose& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }
  Vec3 operator*(const Vec3& point) const { return rotation * point + translation; }

  Pose inverse() const {
    const Quat inv = rotation.conjugate();
    return {inv, -(inv * translation)};
  }

  Mat3 rotation_matrix() const { return rotation.toRotationMatrix(); }
  Eigen::Matrix4d matrix() const;

  bool is_finite() const;
  /// True when the quaternion norm is within `tol` of one and all entries are finite.
  bool is_valid(double tol = 1e-9) const;
};

/// Rotation of `angle` radians about the unit `axis`.
Quat axis_angle(const Vec3& axis, double angle);

/// Rotation-matrix residual ‖RᵀR − I‖_max; zero for an exact rotation.
double orthonormality_residual(const Mat3& r);

/// Largest componentwise difference in translation, and the rotation angle between the two poses.
struct PoseDistance {
  double translation = 0.0;
  double rotation = 0.0;
};
PoseDistance pose_distance(const Pose& a, const Pose& b);

}  // namespace retarget
