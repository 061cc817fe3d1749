#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ergocover/lie.hpp"
#include "support/oracles.hpp"

using namespace ergocover;
using namespace ergocover::lie;

namespace {
constexpr double kPi = std::numbers::pi;

Twist make_twist(double a, double b, double c, double d, double e, double f) {
  Twist t;
  t << a, b, c, d, e, f;
  return t;
}
}  // namespace

TEST_CASE("hat/vee: zero, round trip, skew layout") {
  CHECK(hat(Twist::Zero()).isZero(0.0));

  const Twist t = make_twist(1, 2, 3, 4, 5, 6);
  CHECK((vee(hat(t)) - t).cwiseAbs().maxCoeff() == 0.0);

  // omega = e1: rotation block is skew about x.
  const Mat4 m = hat(make_twist(1, 0, 0, 0, 0, 0));
  CHECK(m(2, 1) == 1.0);
  CHECK(m(1, 2) == -1.0);
  CHECK(m(0, 1) == 0.0);
  CHECK(m(0, 2) == 0.0);
  CHECK(m(1, 0) == 0.0);
  CHECK(m(2, 0) == 0.0);
  CHECK(m.row(3).isZero(0.0));
}

TEST_CASE("hat is linear") {
  Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    const Twist a = oracle::random_twist(rng);
    const Twist b = oracle::random_twist(rng);
    const double s = rng.uniform(-2.0, 2.0);
    CHECK(((hat(a + s * b)) - (hat(a) + s * hat(b))).cwiseAbs().maxCoeff() ==
          0.0);
  }
}

TEST_CASE("vee rejects malformed se(3) matrices") {
  Mat4 bad = hat(make_twist(1, 2, 3, 4, 5, 6));
  bad(0, 1) += 1e-6;  // breaks skew symmetry
  CHECK_THROWS_AS(vee(bad), Error);

  Mat4 bad_bottom = hat(make_twist(1, 2, 3, 4, 5, 6));
  bad_bottom(3, 0) = 1e-6;
  CHECK_THROWS_AS(vee(bad_bottom), Error);
}

TEST_CASE("exp: zero, pure rotation, pure translation") {
  const Pose id = lie::exp(Twist::Zero());
  CHECK(id.rotation.isIdentity(0.0));
  CHECK(id.translation.isZero(0.0));

  // Quarter turn about z; frozen from the Rodrigues formula.
  const Pose quarter = lie::exp(make_twist(0, 0, kPi / 2, 0, 0, 0));
  Mat3 expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  CHECK((quarter.rotation - expected).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(quarter.translation.norm() < 1e-15);

  const Pose shift = lie::exp(make_twist(0, 0, 0, 1, 2, 3));
  CHECK(shift.rotation.isIdentity(0.0));
  CHECK((shift.translation - Vec3(1, 2, 3)).norm() == 0.0);
}

TEST_CASE("exp matches the matrix-series oracle") {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const Twist t = oracle::random_twist(rng, 3.0, 2.0);
    const Mat4 expected = oracle::expm(hat(t));
    CHECK((lie::exp(t).matrix() - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("exp/log round trip below the branch cut") {
  Rng rng(13);
  for (int i = 0; i < 1000; ++i) {
    const Twist t = oracle::random_twist(rng, kPi - 0.1, 3.0);
    const Twist back = lie::log(lie::exp(t));
    CHECK((back - t).cwiseAbs().maxCoeff() < 1e-9);
  }
  // Tiny angles hit the Taylor path.
  for (int i = 0; i < 100; ++i) {
    const Twist t = 1e-10 * oracle::random_twist(rng, 1.0, 1.0);
    CHECK((lie::log(lie::exp(t)) - t).cwiseAbs().maxCoeff() < 1e-18);
  }
}

TEST_CASE("log rejects rotations at the branch cut") {
  Pose half_turn;
  half_turn.rotation = oracle::rodrigues(Vec3(kPi, 0, 0));
  CHECK_THROWS_AS(lie::log(half_turn), LogBranchError);

  Pose nearly;
  nearly.rotation = oracle::rodrigues(Vec3(kPi - 1e-7, 0, 0));
  CHECK_THROWS_AS(lie::log(nearly), LogBranchError);

  Pose fine;
  fine.rotation = oracle::rodrigues(Vec3(kPi - 1e-3, 0, 0));
  CHECK_NOTHROW(lie::log(fine));
}

TEST_CASE("oplus/ominus: identity base, self-difference, round trip") {
  Rng rng(17);
  const Twist t = oracle::random_twist(rng);
  const Pose via_oplus = oplus(Pose::identity(), t);
  const Pose via_exp = lie::exp(t);
  CHECK((via_oplus.matrix() - via_exp.matrix()).cwiseAbs().maxCoeff() <
        1e-15);

  const Pose p = oracle::random_pose(rng);
  CHECK(ominus(p, p).cwiseAbs().maxCoeff() < 1e-14);

  for (int i = 0; i < 100; ++i) {
    const Pose a = oracle::random_pose(rng, 1.4);
    // Keep the relative angle inside the branch: b = a * exp(small).
    const Pose b = oplus(a, oracle::random_twist(rng, 2.9, 2.0));
    const Pose back = oplus(a, ominus(b, a));
    CHECK((back.matrix() - b.matrix()).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("adjoint: identity, homomorphism, conjugation oracle") {
  CHECK(adjoint(Pose::identity()).isIdentity(1e-15));

  Rng rng(19);
  for (int i = 0; i < 100; ++i) {
    const Pose p = oracle::random_pose(rng);
    const Pose q = oracle::random_pose(rng);
    CHECK((adjoint(p * q) - adjoint(p) * adjoint(q)).cwiseAbs().maxCoeff() <
          1e-12);

    const Twist t = oracle::random_twist(rng);
    // Ad(P) t == vee(P hat(t) P^-1)
    const Mat4 conj = p.matrix() * hat(t) * p.inverse().matrix();
    Twist expected;
    expected.head<3>() =
        axial(0.5 * (conj.topLeftCorner<3, 3>() -
                     conj.topLeftCorner<3, 3>().transpose().eval()));
    expected.tail<3>() = conj.topRightCorner<3, 1>();
    CHECK((adjoint(p) * t - expected).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("algebra adjoint: bracket identity and exact zero trace") {
  Rng rng(23);
  for (int i = 0; i < 100; ++i) {
    const Twist a = oracle::random_twist(rng);
    const Twist b = oracle::random_twist(rng);
    const Mat4 bracket = hat(a) * hat(b) - hat(b) * hat(a);
    CHECK((ad(a) * b - vee(bracket, 1e-9)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(ad(a).trace() == 0.0);  // structural zeros, no tolerance
  }
}

TEST_CASE("riem_grad: zero gradient, translation quadratic, trace critical point") {
  CHECK(riem_grad(Pose::identity(), Mat4::Zero()).isZero(0.0));

  // f(P) = ||r - r0||^2 / 2 at R = I: translational part r - r0, rotation 0.
  const Vec3 r0(0.5, -0.3, 0.2);
  Pose p;
  p.translation = Vec3(1.0, 2.0, 3.0);
  Mat4 euclid = Mat4::Zero();
  euclid.topRightCorner<3, 1>() = p.translation - r0;
  const Twist g = riem_grad(p, euclid);
  CHECK((g.tail<3>() - (p.translation - r0)).norm() < 1e-15);
  CHECK(g.head<3>().norm() < 1e-15);

  // FD cross-check of the same function.
  const auto f = [&](const Pose& q) {
    return 0.5 * (q.translation - r0).squaredNorm();
  };
  const Vec6 fd = oracle::fd_pose_gradient(p, f);
  CHECK((g - fd).cwiseAbs().maxCoeff() < 1e-8);

  // f(P) = trace(R) at R = I is a critical point on SO(3).
  Mat4 trace_grad = Mat4::Zero();
  trace_grad.topLeftCorner<3, 3>() = Mat3::Identity();  // d trace(R) / dR = I
  CHECK(riem_grad(Pose::identity(), trace_grad).isZero(1e-15));
}

TEST_CASE("riem_grad agrees with finite differences on random smooth functions") {
  Rng rng(29);
  for (int i = 0; i < 100; ++i) {
    const Pose p = oracle::random_pose(rng);
    // Quadratic in r, linear in R entries.
    const Vec3 r0(rng.normal(), rng.normal(), rng.normal());
    Mat3 a;
    for (int k = 0; k < 9; ++k) a(k / 3, k % 3) = rng.normal();
    const auto f = [&](const Pose& q) {
      return 0.5 * (q.translation - r0).squaredNorm() +
             (a.array() * q.rotation.array()).sum();
    };
    Mat4 euclid = Mat4::Zero();
    euclid.topLeftCorner<3, 3>() = a;
    euclid.topRightCorner<3, 1>() = p.translation - r0;
    const Twist g = riem_grad(p, euclid);
    const Vec6 fd = oracle::fd_pose_gradient(p, f);
    const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
    CHECK((g - fd).cwiseAbs().maxCoeff() / scale < 1e-4);
  }
}

TEST_CASE("parallel transport: self, identity base, composition, linearity") {
  Rng rng(31);
  const Pose p = oracle::random_pose(rng);
  const Twist t = oracle::random_twist(rng);
  CHECK((parallel_transport(p, p, t) - t).cwiseAbs().maxCoeff() < 1e-12);

  const Pose q = oracle::random_pose(rng);
  CHECK((parallel_transport(Pose::identity(), q, t) -
         adjoint(q.inverse()) * t)
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  for (int i = 0; i < 100; ++i) {
    const Pose a = oracle::random_pose(rng);
    const Pose b = oracle::random_pose(rng);
    const Pose c = oracle::random_pose(rng);
    const Twist x = oracle::random_twist(rng);
    const Twist two_hop =
        parallel_transport(b, c, parallel_transport(a, b, x));
    const Twist one_hop = parallel_transport(a, c, x);
    CHECK((two_hop - one_hop).cwiseAbs().maxCoeff() < 1e-9);

    const Twist y = oracle::random_twist(rng);
    const double alpha = rng.uniform(-2, 2), beta = rng.uniform(-2, 2);
    CHECK((parallel_transport(a, b, alpha * x + beta * y) -
           alpha * parallel_transport(a, b, x) -
           beta * parallel_transport(a, b, y))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
  }
}

TEST_CASE("group closure: 1000 compositions keep the rotation orthonormal") {
  Rng rng(37);
  Pose p = Pose::identity();
  for (int i = 0; i < 1000; ++i) p = oplus(p, 0.05 * oracle::random_twist(rng));
  CHECK(p.orthogonality_defect() < 1e-9);
  CHECK(p.is_valid());
}

TEST_CASE("SE(3) Jacobians match their defining expansions") {
  Rng rng(41);
  const double h = 1e-6;
  for (int i = 0; i < 50; ++i) {
    const Twist xi = oracle::random_twist(rng, 2.5, 2.0);
    const Mat6 jr = se3_right_jacobian(xi);
    const Mat6 jr_inv = se3_right_jacobian_inv(xi);
    CHECK((jr * jr_inv - Mat6::Identity()).cwiseAbs().maxCoeff() < 1e-9);

    for (int a = 0; a < 6; ++a) {
      Twist d = Twist::Zero();
      d(a) = h;
      // exp(xi + d) ~= exp(xi) exp(Jr d): column a of Jr by central FD.
      const Twist plus = ominus(lie::exp(xi + d), lie::exp(xi));
      const Twist minus = ominus(lie::exp(xi - d), lie::exp(xi));
      const Vec6 fd_col = (plus - minus) / (2.0 * h);
      CHECK((jr.col(a) - fd_col).cwiseAbs().maxCoeff() < 1e-5);

      // log(exp(xi) exp(d)) ~= xi + Jr^-1 d: column a of Jr^-1 by FD.
      const Twist lp = lie::log(lie::exp(xi) * lie::exp(d));
      const Twist lm = lie::log(lie::exp(xi) * lie::exp(-d));
      const Vec6 fd_inv_col = (lp - lm) / (2.0 * h);
      CHECK((jr_inv.col(a) - fd_inv_col).cwiseAbs().maxCoeff() < 1e-5);
    }
  }
}

TEST_CASE("pose/quaternion serialization round trip, qw >= 0") {
  Rng rng(43);
  for (int i = 0; i < 100; ++i) {
    const Pose p = oracle::random_pose(rng, 3.1);
    const Eigen::Vector4d q = quat_from_rotation(p.rotation);
    CHECK(q(0) >= 0.0);
    CHECK(std::abs(q.norm() - 1.0) < 1e-12);
    CHECK((rotation_from_quat(q) - p.rotation).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("Pose::from_matrix validates structure") {
  Rng rng(47);
  const Pose p = oracle::random_pose(rng);
  const Pose q = Pose::from_matrix(p.matrix());
  CHECK((q.matrix() - p.matrix()).cwiseAbs().maxCoeff() == 0.0);

  Mat4 skewed = p.matrix();
  skewed(0, 0) += 1e-6;
  CHECK_THROWS_AS(Pose::from_matrix(skewed), Error);

  Mat4 bad_bottom = p.matrix();
  bad_bottom(3, 2) = 1e-9;
  CHECK_THROWS_AS(Pose::from_matrix(bad_bottom), Error);
}
