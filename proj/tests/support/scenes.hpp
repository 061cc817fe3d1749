#pragma once

// Hand-rolled scene fixtures for unit and acceptance tests.

#include <cmath>
#include <memory>

#include "ergocover/energy.hpp"
#include "ergocover/sdf.hpp"
#include "ergocover/surface.hpp"
#include "support/oracles.hpp"

namespace testscene {

using namespace ergocover;

/// Square grid on the z = 0 plane, spacing `h`, ROI mass at two opposite
/// corners. Plane SDF. A small fully analytic playground.
inline Scene plane_grid_scene(int side = 12, double h = 0.1, int n_modes = 24,
                              double tau_d = 0.5, double beta = 0.5) {
  const int n = side * side;
  Eigen::MatrixX3d pts(n, 3);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  int k = 0;
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j, ++k) {
      pts.row(k) = Eigen::RowVector3d(i * h, j * h, 0.0);
      // ROI: 2x2 patches at two opposite corners.
      if ((i < 2 && j < 2) || (i >= side - 2 && j >= side - 2)) w(k) = 1.0;
    }
  }
  Scene scene;
  scene.cloud = PointCloudSurface::create(pts, w);
  const auto laplacian = build_graph_laplacian(scene.cloud, 8);
  scene.basis = spectral_basis(laplacian, n_modes);
  scene.phi_target = diffuse(scene.cloud, scene.basis, tau_d, beta);
  scene.c_target = target_coeffs(scene.phi_target, scene.basis);
  scene.sdf = std::make_shared<PlaneSdf>(Eigen::Vector3d(0, 0, 1), 0.0);
  scene.weights = EnergyWeights{5.0, 3.0, 3.0, 0.1};
  scene.deposit.k_neighbors = 10;
  scene.deposit.sigma_a = 2.0 * scene.cloud.median_nn_spacing;
  return scene;
}

/// Fibonacci-sampled sphere with two antipodal ROI caps; analytic sphere SDF.
inline Scene sphere_scene(int n = 400, double radius = 0.5, int n_modes = 30) {
  Eigen::MatrixX3d pts(n, 3);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double y = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
    const double a = golden * i;
    pts.row(i) =
        radius * Eigen::RowVector3d(r * std::cos(a), y, r * std::sin(a));
  }
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (pts(i, 1) > 0.8 * radius || pts(i, 1) < -0.8 * radius) w(i) = 1.0;
  }
  Scene scene;
  scene.cloud = PointCloudSurface::create(pts, w);
  const auto laplacian = build_graph_laplacian(scene.cloud, 8);
  scene.basis = spectral_basis(laplacian, n_modes);
  scene.phi_target = diffuse(scene.cloud, scene.basis, 1.0, 0.5);
  scene.c_target = target_coeffs(scene.phi_target, scene.basis);
  scene.sdf = std::make_shared<SphereSdf>(Eigen::Vector3d::Zero(), radius);
  scene.weights = EnergyWeights{5.0, 3.0, 3.0, 0.1};
  scene.deposit.k_neighbors = 12;
  scene.deposit.sigma_a = 2.0 * scene.cloud.median_nn_spacing;
  return scene;
}

/// Random trajectory hovering near the cloud with mild rotations.
inline Trajectory random_trajectory(const Scene& scene, int n_steps,
                                    Rng& rng, double rot_scale = 0.4) {
  const Eigen::RowVector3d lo = scene.cloud.points.colwise().minCoeff();
  const Eigen::RowVector3d hi = scene.cloud.points.colwise().maxCoeff();
  const double span = (hi - lo).norm();
  Trajectory traj;
  traj.poses.resize(n_steps);
  for (int t = 0; t < n_steps; ++t) {
    Vec6 twist;
    twist.head<3>() = rot_scale * Vec3(rng.normal(), rng.normal(), rng.normal());
    twist.tail<3>().setZero();
    traj.poses[t].rotation = lie::exp(twist).rotation;
    for (int a = 0; a < 3; ++a)
      traj.poses[t].translation(a) =
          rng.uniform(lo(a), hi(a)) + 0.05 * span * rng.normal();
    // Keep clear of exact z = 0 plane degeneracies for sphere scenes.
  }
  return traj;
}

/// Straight on-surface constant-velocity trajectory for the plane scene;
/// exactly zero smoothness/alignment/attachment residuals.
inline Trajectory plane_zero_residual_trajectory(int n_steps, double h) {
  Trajectory traj;
  traj.poses.resize(n_steps);
  for (int t = 0; t < n_steps; ++t) {
    traj.poses[t].rotation = Mat3::Identity();  // z-axis = plane normal
    traj.poses[t].translation = Vec3(0.2 + h * t, 0.35, 0.0);
  }
  return traj;
}

}  // namespace testscene
