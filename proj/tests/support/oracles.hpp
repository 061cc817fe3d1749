#pragma once

// Test-side oracles, independent of the library implementation paths they
// check: matrix-series exponential, brute-force neighbor scans, brute-force
// deposition, and naive finite differences of scalar trajectory energies.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "ergocover/kdtree.hpp"
#include "ergocover/lie.hpp"
#include "ergocover/surface.hpp"
#include "ergocover/trajectory.hpp"

namespace oracle {

using ergocover::Vec3;
using ergocover::Vec6;
using ergocover::Mat3;
using ergocover::Mat4;

/// Matrix exponential by scaling-and-squaring on a plain Taylor series.
/// Converges to ~1e-14 for the twist magnitudes used in tests.
inline Mat4 expm(Mat4 m) {
  int squarings = 0;
  while (m.cwiseAbs().maxCoeff() > 0.25) {
    m *= 0.5;
    ++squarings;
  }
  Mat4 sum = Mat4::Identity();
  Mat4 term = Mat4::Identity();
  for (int k = 1; k <= 20; ++k) {
    term = term * m / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

/// Rodrigues rotation via Eigen's quaternion path (independent of the
/// library's series evaluation).
inline Mat3 rodrigues(const Vec3& omega) {
  const double theta = omega.norm();
  if (theta == 0.0) return Mat3::Identity();
  return Eigen::AngleAxisd(theta, omega / theta).toRotationMatrix();
}

/// Brute-force k nearest neighbors ordered by (squared distance, index).
inline std::vector<ergocover::Neighbor> brute_knn(
    const Eigen::MatrixX3d& points, const Vec3& query, int k) {
  std::vector<ergocover::Neighbor> all(points.rows());
  for (int i = 0; i < points.rows(); ++i)
    all[i] = {i, (points.row(i).transpose() - query).squaredNorm()};
  k = std::min<int>(k, static_cast<int>(all.size()));
  std::partial_sort(all.begin(), all.begin() + k, all.end());
  all.resize(k);
  return all;
}

/// All-pairs deposition without any spatial index.
inline Eigen::VectorXd brute_deposit(const Eigen::MatrixX3d& positions,
                                     const Eigen::MatrixX3d& points, int k,
                                     double sigma_a) {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(points.rows());
  const double inv = 1.0 / (2.0 * sigma_a * sigma_a);
  for (int t = 0; t < positions.rows(); ++t) {
    auto hits = brute_knn(points, positions.row(t), k);
    for (const auto& h : hits) u(h.index) += std::exp(-h.sq_dist * inv);
  }
  return u / u.sum();
}

/// Central finite difference of a scalar trajectory function along every
/// tangent coordinate; the full function is re-evaluated at each probe.
template <typename Fn>
Eigen::VectorXd fd_trajectory_gradient(const ergocover::Trajectory& traj,
                                       Fn&& f, double h = 1e-6) {
  const int nt = traj.size();
  Eigen::VectorXd g(6 * nt);
  for (int t = 0; t < nt; ++t) {
    for (int a = 0; a < 6; ++a) {
      Vec6 step = Vec6::Zero();
      step(a) = h;
      ergocover::Trajectory plus = traj;
      plus.poses[t] = ergocover::lie::oplus(traj.poses[t], step);
      ergocover::Trajectory minus = traj;
      minus.poses[t] = ergocover::lie::oplus(traj.poses[t], -step);
      g(6 * t + a) = (f(plus) - f(minus)) / (2.0 * h);
    }
  }
  return g;
}

/// Central finite difference of a scalar pose function.
template <typename Fn>
Vec6 fd_pose_gradient(const ergocover::lie::Pose& pose, Fn&& f,
                      double h = 1e-6) {
  Vec6 g;
  for (int a = 0; a < 6; ++a) {
    Vec6 step = Vec6::Zero();
    step(a) = h;
    g(a) = (f(ergocover::lie::oplus(pose, step)) -
            f(ergocover::lie::oplus(pose, -step))) /
           (2.0 * h);
  }
  return g;
}

/// Deterministic random pose with rotation angle below `max_angle`.
inline ergocover::lie::Pose random_pose(ergocover::Rng& rng,
                                        double max_angle = 2.5,
                                        double max_shift = 2.0) {
  Vec3 axis(rng.normal(), rng.normal(), rng.normal());
  axis.normalize();
  const double angle = rng.uniform(0.0, max_angle);
  ergocover::lie::Pose p;
  p.rotation = rodrigues(angle * axis);
  p.translation =
      Vec3(rng.uniform(-max_shift, max_shift), rng.uniform(-max_shift, max_shift),
           rng.uniform(-max_shift, max_shift));
  return p;
}

inline Vec6 random_twist(ergocover::Rng& rng, double max_angle = 2.5,
                         double max_shift = 2.0) {
  Vec3 axis(rng.normal(), rng.normal(), rng.normal());
  axis.normalize();
  Vec6 t;
  t.head<3>() = rng.uniform(0.0, max_angle) * axis;
  t.tail<3>() = Vec3(rng.uniform(-max_shift, max_shift),
                     rng.uniform(-max_shift, max_shift),
                     rng.uniform(-max_shift, max_shift));
  return t;
}

}  // namespace oracle
