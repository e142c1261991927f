#include "retarget/pose.hpp"

#include <cmath>

namespace retarget {

Pose Pose::from_xyz_rpy(const Vec3& xyz, const Vec3& rpy) {
  const Quat q = Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) *
                 Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
                 Eigen::AngleAxisd(rpy.x(), Vec3::UnitX());
  return {q.normalized(), xyz};
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_matrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

bool Pose::is_finite() const {
  return rotation.coeffs().allFinite() && translation.allFinite();
}

bool Pose::is_valid(double tol) const {
  return is_finite() && std::abs(rotation.norm() - 1.0) <= tol;
}

Quat axis_angle(const Vec3& axis, double angle) {
  return Quat(Eigen::AngleAxisd(angle, axis));
}

double orthonormality_residual(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

PoseDistance pose_distance(const Pose& a, const Pose& b) {
  PoseDistance d;
  d.translation = (a.translation - b.translation).cwiseAbs().maxCoeff();
  d.rotation = a.rotation.angularDistance(b.rotation);
  return d;
}

}  // namespace retarget
