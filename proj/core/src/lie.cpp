#include "ergocover/lie.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ergocover {
namespace lie {

namespace {

constexpr double kPi = std::numbers::pi;
// Below this angle the Rodrigues coefficients switch to 4th-order Taylor
// series; avoids 0/0 at the identity.
constexpr double kSmallAngle = 1e-8;
constexpr double kBranchMargin = 1e-6;
constexpr double kOrthoTol = 1e-9;

// sin(t)/t, (1-cos t)/t^2, (t - sin t)/t^3 with Taylor fallbacks.
struct RodriguesCoeffs {
  double a, b, c;
};

RodriguesCoeffs rodrigues_coeffs(double theta) {
  RodriguesCoeffs k{};
  const double t2 = theta * theta;
  if (theta < kSmallAngle) {
    k.a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    k.b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
    k.c = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
  } else {
    k.a = std::sin(theta) / theta;
    k.b = (1.0 - std::cos(theta)) / t2;
    k.c = (theta - std::sin(theta)) / (t2 * theta);
  }
  return k;
}

// Coefficient of the w^2 term in Jl^-1: 1/t^2 - (1 + cos t)/(2 t sin t).
double left_jacobian_inv_coeff(double theta) {
  const double t2 = theta * theta;
  if (theta < kSmallAngle) {
    return 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  }
  return 1.0 / t2 - (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
}

Mat3 polar_project(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  return r;
}

}  // namespace

LogBranchError::LogBranchError(double angle)
    : Error("lie::log: rotation angle " + std::to_string(angle) +
            " is within 1e-6 of pi (outside the principal branch)"),
      angle_(angle) {}

Pose Pose::from_matrix(const Mat4& m, double tol) {
  const Mat3 r = m.topLeftCorner<3, 3>();
  if ((r.transpose() * r - Mat3::Identity()).norm() > tol)
    throw Error("Pose::from_matrix: rotation block is not orthonormal");
  if (std::abs(r.determinant() - 1.0) > tol)
    throw Error("Pose::from_matrix: rotation determinant is not +1");
  const Eigen::RowVector4d bottom = m.row(3);
  if (std::abs(bottom(0)) > 1e-12 || std::abs(bottom(1)) > 1e-12 ||
      std::abs(bottom(2)) > 1e-12 || std::abs(bottom(3) - 1.0) > 1e-12)
    throw Error("Pose::from_matrix: bottom row is not [0,0,0,1]");
  Pose p;
  p.rotation = r;
  p.translation = m.topRightCorner<3, 1>();
  return p;
}

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

double Pose::orthogonality_defect() const {
  return (rotation.transpose() * rotation - Mat3::Identity()).norm();
}

bool Pose::is_valid(double tol) const {
  return translation.allFinite() && rotation.allFinite() &&
         orthogonality_defect() <= tol &&
         std::abs(rotation.determinant() - 1.0) <= tol;
}

Mat3 skew(const Vec3& w) {
  Mat3 s;
  s << 0.0, -w.z(), w.y(),
      w.z(), 0.0, -w.x(),
      -w.y(), w.x(), 0.0;
  return s;
}

Vec3 axial(const Mat3& s) { return Vec3(s(2, 1), s(0, 2), s(1, 0)); }

Mat3 so3_exp(const Vec3& omega) {
  const double theta = omega.norm();
  const RodriguesCoeffs k = rodrigues_coeffs(theta);
  const Mat3 w = skew(omega);
  return Mat3::Identity() + k.a * w + k.b * w * w;
}

Vec3 so3_log(const Mat3& rotation) {
  const Vec3 ax = 0.5 * axial(rotation - rotation.transpose());
  const double cos_theta =
      std::clamp(0.5 * (rotation.trace() - 1.0), -1.0, 1.0);
  const double sin_theta = std::min(ax.norm(), 1.0);
  const double theta = std::atan2(sin_theta, cos_theta);
  if (theta >= kPi - kBranchMargin) throw LogBranchError(theta);
  if (theta < kSmallAngle) {
    // theta/sin(theta) ~= 1 + t^2/6 + 7 t^4/360
    const double t2 = theta * theta;
    return (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0) * ax;
  }
  return (theta / sin_theta) * ax;
}

Mat3 so3_left_jacobian(const Vec3& omega) {
  const double theta = omega.norm();
  const RodriguesCoeffs k = rodrigues_coeffs(theta);
  const Mat3 w = skew(omega);
  return Mat3::Identity() + k.b * w + k.c * w * w;
}

Mat3 so3_left_jacobian_inv(const Vec3& omega) {
  const double theta = omega.norm();
  const Mat3 w = skew(omega);
  return Mat3::Identity() - 0.5 * w + left_jacobian_inv_coeff(theta) * w * w;
}

Mat4 hat(const Twist& t) {
  Mat4 m = Mat4::Zero();
  m.topLeftCorner<3, 3>() = skew(t.head<3>());
  m.topRightCorner<3, 1>() = t.tail<3>();
  return m;
}

Twist vee(const Mat4& m, double tol) {
  const Mat3 top = m.topLeftCorner<3, 3>();
  if ((top + top.transpose()).cwiseAbs().maxCoeff() > tol)
    throw Error("lie::vee: rotation block is not skew-symmetric");
  if (m.row(3).cwiseAbs().maxCoeff() > tol)
    throw Error("lie::vee: bottom row is not zero");
  Twist t;
  t.head<3>() = Vec3(m(2, 1), m(0, 2), m(1, 0));
  t.tail<3>() = m.topRightCorner<3, 1>();
  return t;
}

Pose exp(const Twist& t) {
  Pose p;
  p.rotation = so3_exp(t.head<3>());
  p.translation = so3_left_jacobian(t.head<3>()) * t.tail<3>();
  return p;
}

Twist log(const Pose& p) {
  Twist t;
  t.head<3>() = so3_log(p.rotation);
  t.tail<3>() = so3_left_jacobian_inv(t.head<3>()) * p.translation;
  return t;
}

Pose oplus(const Pose& p, const Twist& t) {
  Pose out = p * exp(t);
  if (out.orthogonality_defect() > kOrthoTol)
    out.rotation = polar_project(out.rotation);
  return out;
}

Twist ominus(const Pose& p2, const Pose& p1) { return log(p1.inverse() * p2); }

Mat6 adjoint(const Pose& p) {
  Mat6 m = Mat6::Zero();
  m.topLeftCorner<3, 3>() = p.rotation;
  m.bottomRightCorner<3, 3>() = p.rotation;
  m.bottomLeftCorner<3, 3>() = skew(p.translation) * p.rotation;
  return m;
}

Mat6 ad(const Twist& t) {
  Mat6 m = Mat6::Zero();
  const Mat3 w = skew(t.head<3>());
  m.topLeftCorner<3, 3>() = w;
  m.bottomRightCorner<3, 3>() = w;
  m.bottomLeftCorner<3, 3>() = skew(t.tail<3>());
  return m;
}

Twist riem_grad(const Pose& p, const Mat4& euclid_grad) {
  // d/dtau f(P exp(tau e^))|_0 = <dF/dR, R w^> + <dF/dr, R v>
  //                            = axial(R^T dF/dR - dF/dR^T R) . w
  //                              + (R^T dF/dr) . v
  const Mat3 df_dr = euclid_grad.topLeftCorner<3, 3>();
  const Mat3 m = p.rotation.transpose() * df_dr;
  const Mat3 omega_block = m - m.transpose();
  Twist g;
  g.head<3>() = axial(omega_block);
  g.tail<3>() = p.rotation.transpose() * euclid_grad.topRightCorner<3, 1>();
  return g;
}

Twist parallel_transport(const Pose& from, const Pose& to, const Twist& t) {
  return adjoint(to.inverse() * from) * t;
}

namespace {

// Q block of the SE(3) left Jacobian (the coupling between rotation
// perturbations and the translation part), [omega; v] ordering.
Mat3 se3_jacobian_q(const Vec3& omega, const Vec3& v) {
  const double theta = omega.norm();
  const double t2 = theta * theta;
  double m1, m2, m3;  // series coefficients
  if (theta < 1e-4) {
    // Higher threshold than kSmallAngle: these ratios lose precision as
    // t^4/t^5 denominators kick in.
    m1 = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
    m2 = -1.0 / 24.0 + t2 / 720.0 - t2 * t2 / 40320.0;
    m3 = -1.0 / 120.0 + t2 / 5040.0;
  } else {
    const double st = std::sin(theta);
    const double ct = std::cos(theta);
    m1 = (theta - st) / (t2 * theta);
    m2 = (1.0 - 0.5 * t2 - ct) / (t2 * t2);
    m3 = (theta - st - t2 * theta / 6.0) / (t2 * t2 * theta);
  }
  const Mat3 w = skew(omega);
  const Mat3 p = skew(v);
  const Mat3 wp = w * p;
  const Mat3 pw = p * w;
  const Mat3 wpw = wp * w;
  return 0.5 * p + m1 * (wp + pw + wpw) - m2 * (w * wp + pw * w - 3.0 * wpw) -
         0.5 * (m2 - 3.0 * m3) * (wpw * w + w * wpw);
}

}  // namespace

Mat6 se3_left_jacobian(const Twist& t) {
  const Mat3 jl = so3_left_jacobian(t.head<3>());
  Mat6 j = Mat6::Zero();
  j.topLeftCorner<3, 3>() = jl;
  j.bottomRightCorner<3, 3>() = jl;
  j.bottomLeftCorner<3, 3>() = se3_jacobian_q(t.head<3>(), t.tail<3>());
  return j;
}

Mat6 se3_left_jacobian_inv(const Twist& t) {
  const Mat3 jinv = so3_left_jacobian_inv(t.head<3>());
  const Mat3 q = se3_jacobian_q(t.head<3>(), t.tail<3>());
  Mat6 j = Mat6::Zero();
  j.topLeftCorner<3, 3>() = jinv;
  j.bottomRightCorner<3, 3>() = jinv;
  j.bottomLeftCorner<3, 3>() = -jinv * q * jinv;
  return j;
}

Mat6 se3_right_jacobian(const Twist& t) { return se3_left_jacobian(-t); }

Mat6 se3_right_jacobian_inv(const Twist& t) {
  return se3_left_jacobian_inv(-t);
}

Eigen::Vector4d quat_from_rotation(const Mat3& rotation) {
  Eigen::Quaterniond q(rotation);
  q.normalize();
  Eigen::Vector4d out(q.w(), q.x(), q.y(), q.z());
  // Canonical sign: first nonzero of (qw, qx, qy, qz) positive.
  for (int i = 0; i < 4; ++i) {
    if (out(i) > 0.0) break;
    if (out(i) < 0.0) {
      out = -out;
      break;
    }
  }
  return out;
}

Mat3 rotation_from_quat(const Eigen::Vector4d& q) {
  Eigen::Quaterniond quat(q(0), q(1), q(2), q(3));
  if (quat.norm() < 1e-12)
    throw Error("rotation_from_quat: zero quaternion");
  quat.normalize();
  return quat.toRotationMatrix();
}

}  // namespace lie
}  // namespace ergocover
