#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "ergocover/util.hpp"

namespace ergocover {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Tangent coordinates of SE(3). Component order is fixed throughout the
/// library: [omega; v] with omega = rotational part (radians) in entries
/// 0..2 and v = translational part (meters) in entries 3..5.
using Twist = Vec6;

namespace lie {

/// Thrown by log/ominus when the rotation angle is within 1e-6 of pi
/// (outside the principal branch this library supports).
class LogBranchError : public Error {
 public:
  explicit LogBranchError(double angle);
  double angle() const { return angle_; }

 private:
  double angle_;
};

/// Rigid transformation: x -> rotation * x + translation.
///
/// Stored as a 3x3 rotation block plus translation; the homogeneous bottom
/// row is implicit and therefore exact. Rotations are kept orthonormal
/// within 1e-9 (oplus re-projects when the defect grows past that).
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return Pose{}; }

  /// Builds from a homogeneous 4x4. Validates orthonormality, det = +1,
  /// and the [0,0,0,1] bottom row; throws Error on violation.
  static Pose from_matrix(const Mat4& m, double tol = 1e-9);

  Mat4 matrix() const;

  Pose inverse() const {
    Pose p;
    p.rotation = rotation.transpose();
    p.translation = -(p.rotation * translation);
    return p;
  }

  Pose operator*(const Pose& rhs) const {
    Pose p;
    p.rotation = rotation * rhs.rotation;
    p.translation = rotation * rhs.translation + translation;
    return p;
  }

  /// Third column of the rotation: the body z-axis (normal-alignment axis).
  Vec3 z_axis() const { return rotation.col(2); }

  /// Frobenius orthogonality defect ||R^T R - I||.
  double orthogonality_defect() const;

  bool is_valid(double tol = 1e-9) const;
};

// --- so(3) helpers ---------------------------------------------------------

/// skew(w) * x == w.cross(x)
Mat3 skew(const Vec3& w);

/// Axial vector of a (skew) matrix: inverse of skew on exactly-skew input.
Vec3 axial(const Mat3& s);

/// Rodrigues rotation exp(skew(omega)).
Mat3 so3_exp(const Vec3& omega);

/// Principal-branch rotation log; throws LogBranchError near angle pi.
Vec3 so3_log(const Mat3& rotation);

/// Left Jacobian of SO(3) (equals the V matrix coupling translation in the
/// SE(3) exponential) and its inverse.
Mat3 so3_left_jacobian(const Vec3& omega);
Mat3 so3_left_jacobian_inv(const Vec3& omega);

// --- se(3) core operations --------------------------------------------------

/// hat: R^6 -> 4x4 se(3) matrix  [[skew(omega), v], [0, 0]].
Mat4 hat(const Twist& t);

/// vee: inverse of hat. Rejects matrices violating the se(3) structure
/// (non-skew rotation block or nonzero bottom row) beyond `tol`.
Twist vee(const Mat4& m, double tol = 1e-9);

/// Closed-form SE(3) exponential (Rodrigues + V-matrix translation).
Pose exp(const Twist& t);

/// Principal-branch SE(3) logarithm; exact inverse of exp for angles
/// below pi. Throws LogBranchError within 1e-6 of pi.
Twist log(const Pose& p);

/// Right-multiplicative retraction  P (+) t = P * exp(t).
/// Re-projects the rotation onto SO(3) when the orthogonality defect of the
/// product exceeds 1e-9.
Pose oplus(const Pose& p, const Twist& t);

/// P2 (-) P1 = log(P1^-1 P2). Propagates LogBranchError.
Twist ominus(const Pose& p2, const Pose& p1);

/// Group adjoint: 6x6 matrix with Ad(P) * t == vee(P hat(t) P^-1).
Mat6 adjoint(const Pose& p);

/// Algebra adjoint: ad(t) * s == vee(hat(t) hat(s) - hat(s) hat(t)).
/// Structurally traceless.
Mat6 ad(const Twist& t);

/// Projects a Euclidean gradient dF/dP (4x4, bottom row ignored) onto the
/// tangent space at P, returning g with
///   d/dtau f(P (+) tau * eps)|_0 = dot(g, eps)
/// for every twist eps (Euclidean pairing on R^6).
Twist riem_grad(const Pose& p, const Mat4& euclid_grad);

/// Parallel transport of tangent vectors between tangent spaces:
/// Ad_{to^-1 * from} * t.  transport(P, P, t) == t (checked for the
/// self case, which is handled exactly).
Twist parallel_transport(const Pose& from, const Pose& to, const Twist& t);

// --- SE(3) Jacobians (micro-Lie closed forms) -------------------------------

/// Left Jacobian of SE(3) in [omega; v] ordering:
///   [[Jl(omega), 0], [Q(v, omega), Jl(omega)]]
/// satisfying exp(t + d) ~= exp((Jl(t) d)) * exp(t) to first order.
Mat6 se3_left_jacobian(const Twist& t);
Mat6 se3_left_jacobian_inv(const Twist& t);

/// Right Jacobian Jr(t) = Jl(-t): exp(t + d) ~= exp(t) * exp(Jr(t) d).
Mat6 se3_right_jacobian(const Twist& t);

/// Jr^-1(t): log(exp(t) * exp(d)) ~= t + Jr^-1(t) d for small d.
Mat6 se3_right_jacobian_inv(const Twist& t);

// --- serialization helpers ---------------------------------------------------

/// Unit quaternion (qw, qx, qy, qz) with qw >= 0 (first nonzero component
/// made positive when qw == 0).
Eigen::Vector4d quat_from_rotation(const Mat3& rotation);
Mat3 rotation_from_quat(const Eigen::Vector4d& q);

}  // namespace lie
}  // namespace ergocover
