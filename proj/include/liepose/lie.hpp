#pragma once

// Closed-form SO(3) / SE(3) operations: exponential and logarithm maps,
// composition, inversion and quaternion conversions. Every map is templated
// on the scalar so the same code runs on doubles and on dual numbers.
//
// Conventions, fixed project-wide:
//   * quaternions are w-first (w, x, y, z); the canonical representative of
//     the double cover has w >= 0
//   * twists are translation-first: components 0..2 are rho (meters),
//     components 3..5 are phi = axis * angle (radians)
//   * rotation angles recovered by the log maps lie in [0, pi]
//
// Trigonometric ratios switch to 4th-order Taylor series below an angle of
// 1e-4 rad; the series are written in theta^2 so no square root is taken on
// that branch.

#include <Eigen/Core>

#include <cmath>

#include "liepose/errors.hpp"
#include "liepose/scalar.hpp"

namespace liepose {

template <typename S>
using Mat3T = Eigen::Matrix<S, 3, 3>;
template <typename S>
using Vec3T = Eigen::Matrix<S, 3, 1>;
template <typename S>
using Vec4T = Eigen::Matrix<S, 4, 1>;
template <typename S>
using Vec6T = Eigen::Matrix<S, 6, 1>;

using Mat3 = Mat3T<double>;
using Vec3 = Vec3T<double>;
using Vec4 = Vec4T<double>;
using Vec6 = Vec6T<double>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Twist with translation-first ordering: (rho, phi).
using Twist6 = Vec6;

inline constexpr double kSmallAngle = 1e-4;
inline constexpr double kTinyQuatAxis = 1e-9;
inline constexpr double kZeroQuatNorm = 1e-12;

template <typename S>
struct QuatT {
  S w;
  S x;
  S y;
  S z;
};
using UnitQuaternion = QuatT<double>;

template <typename S>
struct PoseT {
  Mat3T<S> rotation = Mat3T<S>::Identity();
  Vec3T<S> translation = Vec3T<S>::Zero();
};
using PoseSE3 = PoseT<double>;

template <typename S>
PoseT<S> pose_cast(const PoseSE3& p) {
  return {p.rotation.template cast<S>(), p.translation.template cast<S>()};
}

inline Twist6 make_twist(const Vec3& rho, const Vec3& phi) {
  Twist6 xi;
  xi.head<3>() = rho;
  xi.tail<3>() = phi;
  return xi;
}

template <typename S>
Mat3T<S> skew(const Vec3T<S>& v) {
  Mat3T<S> m;
  m << S(0), -v.z(), v.y(),  //
      v.z(), S(0), -v.x(),   //
      -v.y(), v.x(), S(0);
  return m;
}

/// Normalize a raw 4-vector (w, x, y, z) to the canonical unit quaternion
/// (w >= 0). Throws ZeroNormQuaternion when the norm is below 1e-12.
template <typename S>
QuatT<S> quat_normalize(const Vec4T<S>& q_raw) {
  using std::sqrt;
  const S n2 = q_raw[0] * q_raw[0] + q_raw[1] * q_raw[1] +
               q_raw[2] * q_raw[2] + q_raw[3] * q_raw[3];
  if (!(value_of(n2) > kZeroQuatNorm * kZeroQuatNorm)) {
    throw ZeroNormQuaternion();
  }
  const S inv = S(1) / sqrt(n2);
  QuatT<S> q{q_raw[0] * inv, q_raw[1] * inv, q_raw[2] * inv, q_raw[3] * inv};
  if (value_of(q.w) < 0.0) {
    q.w = -q.w;
    q.x = -q.x;
    q.y = -q.y;
    q.z = -q.z;
  }
  return q;
}

template <typename S>
Mat3T<S> quat_to_rotmat(const QuatT<S>& q) {
  const S ww = q.w * q.w, xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
  const S wx = q.w * q.x, wy = q.w * q.y, wz = q.w * q.z;
  const S xy = q.x * q.y, xz = q.x * q.z, yz = q.y * q.z;
  Mat3T<S> R;
  R << ww + xx - yy - zz, S(2) * (xy - wz), S(2) * (xz + wy),  //
      S(2) * (xy + wz), ww - xx + yy - zz, S(2) * (yz - wx),   //
      S(2) * (xz - wy), S(2) * (yz + wx), ww - xx - yy + zz;
  return R;
}

/// Rotation matrix to canonical unit quaternion. Branches on the largest of
/// the trace and the diagonal entries, so the result stays well conditioned
/// for rotations near pi.
template <typename S>
QuatT<S> quat_from_rotmat(const Mat3T<S>& R) {
  using std::sqrt;
  const double t00 = value_of(R(0, 0));
  const double t11 = value_of(R(1, 1));
  const double t22 = value_of(R(2, 2));
  S w, x, y, z;
  if (t00 + t11 + t22 > 0.0) {
    const S r = sqrt(S(1) + R(0, 0) + R(1, 1) + R(2, 2));
    const S s = S(0.5) / r;
    w = S(0.5) * r;
    x = (R(2, 1) - R(1, 2)) * s;
    y = (R(0, 2) - R(2, 0)) * s;
    z = (R(1, 0) - R(0, 1)) * s;
  } else if (t00 >= t11 && t00 >= t22) {
    const S r = sqrt(S(1) + R(0, 0) - R(1, 1) - R(2, 2));
    const S s = S(0.5) / r;
    w = (R(2, 1) - R(1, 2)) * s;
    x = S(0.5) * r;
    y = (R(0, 1) + R(1, 0)) * s;
    z = (R(0, 2) + R(2, 0)) * s;
  } else if (t11 >= t22) {
    const S r = sqrt(S(1) - R(0, 0) + R(1, 1) - R(2, 2));
    const S s = S(0.5) / r;
    w = (R(0, 2) - R(2, 0)) * s;
    x = (R(0, 1) + R(1, 0)) * s;
    y = S(0.5) * r;
    z = (R(1, 2) + R(2, 1)) * s;
  } else {
    const S r = sqrt(S(1) - R(0, 0) - R(1, 1) + R(2, 2));
    const S s = S(0.5) / r;
    w = (R(1, 0) - R(0, 1)) * s;
    x = (R(0, 2) + R(2, 0)) * s;
    y = (R(1, 2) + R(2, 1)) * s;
    z = S(0.5) * r;
  }
  Vec4T<S> q;
  q << w, x, y, z;
  return quat_normalize(q);
}

/// Half-angle axis vector (theta / 2) * axis of a unit quaternion. Returns
/// the zero vector when the vector part has norm below 1e-9.
template <typename S>
Vec3T<S> quat_log(const QuatT<S>& q) {
  using std::atan2;
  using std::sqrt;
  const S s2 = q.x * q.x + q.y * q.y + q.z * q.z;
  Vec3T<S> v;
  v << q.x, q.y, q.z;
  if (value_of(s2) < kTinyQuatAxis * kTinyQuatAxis) {
    return Vec3T<S>::Zero();
  }
  const S sn = sqrt(s2);
  return v * (atan2(sn, q.w) / sn);
}

namespace detail {

// sin(theta)/theta and (1 - cos(theta))/theta^2 from theta^2.
template <typename S>
void rotation_coeffs(const S& theta2, S& a, S& b) {
  if (value_of(theta2) < kSmallAngle * kSmallAngle) {
    a = S(1) - theta2 / S(6) + theta2 * theta2 / S(120);
    b = S(0.5) - theta2 / S(24) + theta2 * theta2 / S(720);
    return;
  }
  using std::sin;
  using std::sqrt;
  const S theta = sqrt(theta2);
  a = sin(theta) / theta;
  const S sh = sin(theta * S(0.5));
  b = S(2) * sh * sh / theta2;
}

// (theta - sin(theta))/theta^3 from theta^2.
template <typename S>
S translation_coeff(const S& theta2) {
  if (value_of(theta2) < kSmallAngle * kSmallAngle) {
    return S(1) / S(6) - theta2 / S(120) + theta2 * theta2 / S(5040);
  }
  using std::sin;
  using std::sqrt;
  const S theta = sqrt(theta2);
  return (theta - sin(theta)) / (theta2 * theta);
}

// 1/theta^2 - cot(theta/2)/(2 theta) from theta^2.
template <typename S>
S inverse_translation_coeff(const S& theta2) {
  if (value_of(theta2) < kSmallAngle * kSmallAngle) {
    return S(1) / S(12) + theta2 / S(720) +
           theta2 * theta2 * (S(1) / S(30240));
  }
  using std::cos;
  using std::sin;
  using std::sqrt;
  const S theta = sqrt(theta2);
  const S half = theta * S(0.5);
  return S(1) / theta2 - cos(half) / (S(2) * theta * sin(half));
}

}  // namespace detail

template <typename S>
Mat3T<S> so3_exp(const Vec3T<S>& phi) {
  const S theta2 = phi.dot(phi);
  S a, b;
  detail::rotation_coeffs(theta2, a, b);
  const Mat3T<S> K = skew(phi);
  return Mat3T<S>(Mat3T<S>::Identity() + a * K + b * (K * K));
}

/// Axis-angle vector of a rotation matrix, with angle in [0, pi]. Goes
/// through the quaternion so the near-pi case stays well conditioned.
template <typename S>
Vec3T<S> so3_log(const Mat3T<S>& R) {
  using std::atan2;
  using std::sqrt;
  const QuatT<S> q = quat_from_rotmat(R);
  const S s2 = q.x * q.x + q.y * q.y + q.z * q.z;
  Vec3T<S> v;
  v << q.x, q.y, q.z;
  if (value_of(s2) < 1e-18) {
    // theta below ~2e-9: atan2(s, w)/s collapses to 1/w at this scale.
    return Vec3T<S>(v * (S(2) / q.w));
  }
  const S sn = sqrt(s2);
  return Vec3T<S>(v * (S(2) * atan2(sn, q.w) / sn));
}

/// Left Jacobian of SO(3): V = I + b K + c K^2 with K = skew(phi).
template <typename S>
Mat3T<S> so3_left_jacobian(const Vec3T<S>& phi) {
  const S theta2 = phi.dot(phi);
  S a, b;
  detail::rotation_coeffs(theta2, a, b);
  const S c = detail::translation_coeff(theta2);
  const Mat3T<S> K = skew(phi);
  return Mat3T<S>(Mat3T<S>::Identity() + b * K + c * (K * K));
}

template <typename S>
Mat3T<S> so3_left_jacobian_inv(const Vec3T<S>& phi) {
  const S theta2 = phi.dot(phi);
  const S d = detail::inverse_translation_coeff(theta2);
  const Mat3T<S> K = skew(phi);
  return Mat3T<S>(Mat3T<S>::Identity() - S(0.5) * K + d * (K * K));
}

template <typename S>
PoseT<S> se3_exp(const Vec6T<S>& xi) {
  const Vec3T<S> rho = xi.template head<3>();
  const Vec3T<S> phi = xi.template tail<3>();
  PoseT<S> out;
  out.rotation = so3_exp(phi);
  out.translation = so3_left_jacobian(phi) * rho;
  return out;
}

template <typename S>
Vec6T<S> se3_log(const PoseT<S>& p) {
  const Vec3T<S> phi = so3_log(p.rotation);
  Vec6T<S> xi;
  xi.template head<3>() = so3_left_jacobian_inv(phi) * p.translation;
  xi.template tail<3>() = phi;
  return xi;
}

template <typename S>
PoseT<S> se3_compose(const PoseT<S>& a, const PoseT<S>& b) {
  return {Mat3T<S>(a.rotation * b.rotation),
          Vec3T<S>(a.rotation * b.translation + a.translation)};
}

template <typename S>
PoseT<S> se3_inverse(const PoseT<S>& p) {
  PoseT<S> out;
  out.rotation = p.rotation.transpose();
  out.translation = -(out.rotation * p.translation);
  return out;
}

inline PoseSE3 pose_from_quat(const UnitQuaternion& q, const Vec3& t) {
  return {quat_to_rotmat(q), t};
}

inline bool is_rotation_matrix(const Mat3& R, double tol) {
  const double ortho = (R.transpose() * R - Mat3::Identity()).norm();
  return ortho <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

}  // namespace liepose
