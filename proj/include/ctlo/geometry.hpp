// Copyright 2026, The ctlo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * \file geometry.hpp
 * \brief Rigid transforms, SO(3) helpers and continuous-time interpolation.
 */
#pragma once

#include <cstdint>
#include <span>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace ctlo {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Quat = Eigen::Quaterniond;

/** \brief Rigid transform stored as a unit quaternion and a translation. */
struct Pose {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  Pose() = default;
  /// The quaternion is normalized on construction.
  Pose(const Quat& q, const Vec3& t);
  Pose(const Mat3& R, const Vec3& t);

  static Pose Identity() { return Pose(); }
  static Pose FromMatrix(const Mat4& T);

  Mat3 rotation_matrix() const { return rotation.toRotationMatrix(); }
  Mat4 matrix() const;

  Pose inverse() const;
  Pose operator*(const Pose& other) const;
  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }
};

Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);
Vec3 transform_point(const Pose& pose, const Vec3& p);

/** \brief Begin/end poses of one scan. Points are interpolated between them. */
struct TrajectoryFrame {
  Pose begin;
  Pose end;
  int64_t scan_index = 0;
  double tau_begin = 0.0;
  double tau_end = 0.0;
};

struct InterpolatedPose {
  double alpha = 0.0;
  Pose pose;
};

Mat3 skew(const Vec3& v);

/// SO(3) exponential of a rotation vector.
Quat exp_quat(const Vec3& omega);
Mat3 exp_so3(const Vec3& omega);
/// Rotation vector with angle in [0, pi].
Vec3 log_quat(const Quat& q);
Vec3 log_so3(const Mat3& R);

/// Right Jacobian of SO(3) and its inverse.
Mat3 right_jacobian(const Vec3& omega);
Mat3 right_jacobian_inverse(const Vec3& omega);

/// Rotation angle of q in radians, in [0, pi].
double rotation_angle(const Quat& q);
/// Angle in radians of the rotation taking a to b.
double angular_distance(const Quat& a, const Quat& b);

/**
 * \brief Geodesic interpolation on SO(3) along the shorter arc.
 *
 * Computed as r_b * Exp(alpha * Log(r_b^-1 r_e)); alpha is clamped to [0, 1]
 * and the endpoints are returned exactly.
 */
Quat slerp(const Quat& r_b, const Quat& r_e, double alpha);

Pose interpolate_pose(const Pose& begin, const Pose& end, double alpha);
Pose interpolate_pose(const TrajectoryFrame& frame, double alpha);
InterpolatedPose interpolate(const TrajectoryFrame& frame, double alpha);

/**
 * \brief Least-squares rigid transform T minimizing sum |T * source_i - target_i|^2.
 *
 * Closed form from the SVD of the cross-covariance, with the reflection case
 * corrected so that det(R) = +1. Throws ErrorCode::kDegenerateInput on fewer
 * than 3 points, mismatched sizes or collinear input.
 */
Pose fit_rigid_transform(std::span<const Vec3> source, std::span<const Vec3> target);

/// Yaw angle (rotation about +z) of the rotated x axis.
double yaw_of(const Quat& q);
/// Pose keeping only the translation and yaw of p.
Pose gravity_aligned(const Pose& p);
Quat rot_z(double radians);

}  // namespace ctlo
