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

#include "ctlo/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

#include "ctlo/errors.hpp"

namespace ctlo {

Pose::Pose(const Quat& q, const Vec3& t) : rotation(q.normalized()), translation(t) {}

Pose::Pose(const Mat3& R, const Vec3& t) : rotation(Quat(R).normalized()), translation(t) {}

Pose Pose::FromMatrix(const Mat4& T) {
  return Pose(Mat3(T.topLeftCorner<3, 3>()), Vec3(T.topRightCorner<3, 1>()));
}

Mat4 Pose::matrix() const {
  Mat4 T = Mat4::Identity();
  T.topLeftCorner<3, 3>() = rotation_matrix();
  T.topRightCorner<3, 1>() = translation;
  return T;
}

Pose Pose::inverse() const {
  Pose out;
  out.rotation = rotation.conjugate();
  out.translation = -(out.rotation * translation);
  return out;
}

Pose Pose::operator*(const Pose& other) const {
  Pose out;
  out.rotation = (rotation * other.rotation).normalized();
  out.translation = rotation * other.translation + translation;
  return out;
}

Pose compose(const Pose& a, const Pose& b) { return a * b; }
Pose inverse(const Pose& p) { return p.inverse(); }
Vec3 transform_point(const Pose& pose, const Vec3& p) { return pose * p; }

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),  //
      v.z(), 0.0, -v.x(),   //
      -v.y(), v.x(), 0.0;
  return m;
}

Quat exp_quat(const Vec3& omega) {
  const double theta = omega.norm();
  if (theta < 1e-8) {
    const double t2 = theta * theta;
    Quat q(1.0 - t2 / 8.0, 0.0, 0.0, 0.0);
    q.vec() = 0.5 * (1.0 - t2 / 24.0) * omega;
    return q.normalized();
  }
  const double half = 0.5 * theta;
  Quat q;
  q.w() = std::cos(half);
  q.vec() = (std::sin(half) / theta) * omega;
  return q;
}

Mat3 exp_so3(const Vec3& omega) { return exp_quat(omega).toRotationMatrix(); }

Vec3 log_quat(const Quat& q_in) {
  Quat q = q_in.normalized();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  const double n = q.vec().norm();
  const double w = q.w();
  double factor;
  if (n < 1e-10) {
    // angle / n expanded around n = 0
    factor = 2.0 / w * (1.0 - n * n / (3.0 * w * w));
  } else {
    factor = 2.0 * std::atan2(n, w) / n;
  }
  return factor * q.vec();
}

Vec3 log_so3(const Mat3& R) { return log_quat(Quat(R)); }

Mat3 right_jacobian(const Vec3& omega) {
  const double theta = omega.norm();
  const Mat3 W = skew(omega);
  if (theta < 1e-6) return Mat3::Identity() - 0.5 * W + (1.0 / 6.0) * W * W;
  const double t2 = theta * theta;
  return Mat3::Identity() - ((1.0 - std::cos(theta)) / t2) * W +
         ((theta - std::sin(theta)) / (t2 * theta)) * W * W;
}

Mat3 right_jacobian_inverse(const Vec3& omega) {
  const double theta = omega.norm();
  const Mat3 W = skew(omega);
  if (theta < 1e-6) return Mat3::Identity() + 0.5 * W + (1.0 / 12.0) * W * W;
  const double coeff =
      1.0 / (theta * theta) - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  return Mat3::Identity() + 0.5 * W + coeff * W * W;
}

double rotation_angle(const Quat& q) { return log_quat(q).norm(); }

double angular_distance(const Quat& a, const Quat& b) {
  return rotation_angle(a.conjugate() * b);
}

Quat slerp(const Quat& r_b, const Quat& r_e, double alpha) {
  // Unit inputs pass through untouched at the endpoints.
  const auto unit = [](const Quat& q) {
    return std::abs(q.squaredNorm() - 1.0) < 1e-14 ? q : q.normalized();
  };
  const Quat qb = unit(r_b);
  const Quat qe = unit(r_e);
  if (!(alpha > 0.0)) return qb;
  if (alpha >= 1.0) return qe;
  // log_quat takes the shorter arc of the relative rotation.
  const Vec3 phi = log_quat(qb.conjugate() * qe);
  return (qb * exp_quat(alpha * phi)).normalized();
}

Pose interpolate_pose(const Pose& begin, const Pose& end, double alpha) {
  alpha = std::clamp(alpha, 0.0, 1.0);
  Pose out;
  out.rotation = slerp(begin.rotation, end.rotation, alpha);
  out.translation = (1.0 - alpha) * begin.translation + alpha * end.translation;
  return out;
}

Pose interpolate_pose(const TrajectoryFrame& frame, double alpha) {
  return interpolate_pose(frame.begin, frame.end, alpha);
}

InterpolatedPose interpolate(const TrajectoryFrame& frame, double alpha) {
  alpha = std::clamp(alpha, 0.0, 1.0);
  return {alpha, interpolate_pose(frame, alpha)};
}

Pose fit_rigid_transform(std::span<const Vec3> source, std::span<const Vec3> target) {
  if (source.size() != target.size())
    throw Error(ErrorCode::kDegenerateInput, "source and target sizes differ");
  if (source.size() < 3)
    throw Error(ErrorCode::kDegenerateInput, "at least 3 correspondences are required");

  const double n = static_cast<double>(source.size());
  Vec3 mean_s = Vec3::Zero(), mean_t = Vec3::Zero();
  for (size_t i = 0; i < source.size(); ++i) {
    mean_s += source[i];
    mean_t += target[i];
  }
  mean_s /= n;
  mean_t /= n;

  Mat3 H = Mat3::Zero();
  for (size_t i = 0; i < source.size(); ++i)
    H += (source[i] - mean_s) * (target[i] - mean_t).transpose();

  Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= 1e-12 * sv(0))
    throw Error(ErrorCode::kDegenerateInput, "cross-covariance is rank deficient");

  const Mat3 U = svd.matrixU();
  const Mat3 V = svd.matrixV();
  Mat3 D = Mat3::Identity();
  if ((V * U.transpose()).determinant() < 0.0) D(2, 2) = -1.0;
  const Mat3 R = V * D * U.transpose();
  return Pose(R, mean_t - R * mean_s);
}

double yaw_of(const Quat& q) {
  const Vec3 x = q * Vec3::UnitX();
  return std::atan2(x.y(), x.x());
}

Quat rot_z(double radians) { return Quat(Eigen::AngleAxisd(radians, Vec3::UnitZ())); }

Pose gravity_aligned(const Pose& p) { return Pose(rot_z(yaw_of(p.rotation)), p.translation); }

}  // namespace ctlo
