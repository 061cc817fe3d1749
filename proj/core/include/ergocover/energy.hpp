#pragma once

#include <memory>

#include <Eigen/Core>

#include "ergocover/sdf.hpp"
#include "ergocover/surface.hpp"
#include "ergocover/trajectory.hpp"

namespace ergocover {

struct EnergyWeights {
  double w_s = 5.0;  ///< smoothness
  double w_a = 3.0;  ///< surface-normal alignment
  double w_f = 3.0;  ///< surface attachment
  double w_e = 0.1;  ///< ergodic metric
};

struct EnergyReport {
  double v_s = 0.0;
  double v_a = 0.0;
  double v_f = 0.0;
  double v_e = 0.0;
  double v_total = 0.0;
};

struct DepositParams {
  int k_neighbors = 60;
  double sigma_a = 0.0;  ///< <= 0: resolved to 2x median spacing at scene build
};

/// Everything an energy evaluation needs; immutable after construction,
/// shared read-only by all particles and threads.
struct Scene {
  PointCloudSurface cloud;
  SpectralBasis basis;
  Eigen::VectorXd phi_target;  ///< diffused target distribution
  Eigen::VectorXd c_target;    ///< its basis coefficients
  std::shared_ptr<const Sdf> sdf;
  EnergyWeights weights;
  DepositParams deposit;
};

// --- individual energy terms -------------------------------------------------

/// (w_s/2) sum_t || (x_{t+1} (-) x_t) - (x_t (-) x_{t-1}) ||^2
double eval_smoothness(const Trajectory& traj, double w_s);

/// (w_a/2) sum_t (z_t . grad_sdf(r_t) - 1)^2
double eval_align(const Trajectory& traj, const Sdf& sdf, double w_a);

/// (w_f/2) sum_t sdf(r_t)^2
double eval_attach(const Trajectory& traj, const Sdf& sdf, double w_f);

/// (w_e/2) sum_i Lambda_i (c(X)_i - c_i)^2 with c(X) the coefficients of
/// the trajectory's deposited distribution.
double eval_ergodic(const Trajectory& traj, const PointCloudSurface& cloud,
                    const SpectralBasis& basis,
                    const Eigen::VectorXd& c_target, double w_e, int k,
                    double sigma_a);

EnergyReport total_energy(const Trajectory& traj, const Scene& scene);

// --- residual linearization ----------------------------------------------------

/// Sum-of-squares view of the energy at a base trajectory:
///   V = 1/2 ||residual||^2   (weights folded in as sqrt factors)
/// with a finite-difference Jacobian in the chosen per-pose chart.
/// The K-nearest-neighbor assignment of the ergodic term is frozen at the
/// base point, so each linearization is of a locally smooth function.
struct Linearization {
  EnergyReport report;
  Eigen::VectorXd residual;
  Eigen::MatrixXd jacobian;  ///< residual_dim x dof

  int dof() const { return static_cast<int>(jacobian.cols()); }

  /// grad V = J^T r.
  Eigen::VectorXd gradient() const { return jacobian.transpose() * residual; }

  /// Ridge added to J^T J: 1e-8 tr(J^T J)/dof plus a tiny absolute floor
  /// that keeps the zero-residual case positive definite.
  double ridge() const;

  /// H = J^T J + ridge I, assembled blockwise (smoothness tridiagonal,
  /// alignment/attachment diagonal, ergodic dense over translations).
  Eigen::MatrixXd gn_matrix() const;

  // Layout bookkeeping (rows: smoothness, alignment, attachment, ergodic).
  int n_steps = 0;
  int n_modes = 0;
  bool tangent_chart = true;  ///< false for the 7-per-pose quaternion chart
};

/// Linearization in the tangent chart (6 coordinates per pose, [omega; v]).
Linearization linearize(const Trajectory& traj, const Scene& scene);

/// grad V in the tangent chart; finite-difference verified against central
/// differences of the total energy.
TangentField grad_energy(const Trajectory& traj, const Scene& scene);

/// Gauss-Newton matrix H = J^T J + ridge I in the tangent chart.
Eigen::MatrixXd gn_hessian(const Trajectory& traj, const Scene& scene);

// --- quaternion chart (manifold-unaware baseline) ----------------------------

/// Packs a trajectory as (tx,ty,tz, qw,qx,qy,qz) per pose.
Eigen::VectorXd pose_params(const Trajectory& traj);

/// Unpacks, normalizing each quaternion.
Trajectory trajectory_from_params(const Eigen::VectorXd& params);

/// Linearization with a 7-per-pose Jacobian (used by the projected
/// gradient baseline).
Linearization linearize_params(const Eigen::VectorXd& params,
                               const Scene& scene);

}  // namespace ergocover
