#pragma once

#include <vector>

#include <Eigen/Core>

#include "ergocover/energy.hpp"
#include "ergocover/trajectory.hpp"

namespace ergocover {

/// Kernel and interaction options for the Stein updates.
struct SvgdOptions {
  double kernel_length = 0.05;  ///< l in exp(-||. ||^2 / l)

  /// Default: the sum-over-timesteps kernel is applied per timestep, each
  /// step using its own kernel factor. This preserves the single-particle
  /// degeneracy exactly (self kernel factor 1 per step). The alternative
  /// scales whole-trajectory blocks by the summed kernel value.
  bool per_step_kernel = true;

  /// Regression hook: disabling transport must change results whenever
  /// particles differ in rotation.
  bool use_transport = true;
};

/// Per-step kernel values exp(-||x_t (-) x'_t||^2 / l), length N_t.
Eigen::VectorXd per_step_kernel(const Trajectory& x, const Trajectory& x_ref,
                                double kernel_length);

/// Trajectory kernel: sum of the per-step values. Symmetric; equals N_t at
/// x == x_ref.
double traj_kernel(const Trajectory& x, const Trajectory& x_ref,
                   double kernel_length);

/// Gradient of the trajectory kernel with respect to its first argument,
/// expressed per timestep in the first argument's tangent spaces.
TangentField kernel_grad1(const Trajectory& x, const Trajectory& x_ref,
                          double kernel_length);

/// Stein vector field at every particle:
///   phi*(X') = 1/N sum_i P_{X_i -> X'}( k . grad log p(X_i) + grad_1 k )
/// computed per timestep and parallel-transported via the group adjoint.
/// grads_logp[i] must be the tangent gradient of log p at particle i
/// (-grad V for the Boltzmann target).
/// Throws when two distinct particles coincide at some timestep.
std::vector<TangentField> svgd_direction(
    const std::vector<Trajectory>& particles,
    const std::vector<TangentField>& grads_logp, const SvgdOptions& options);

/// Left-hand side of the preconditioned update for one target particle:
///   sum_i [ K_i H_i K_i + ghat_i ghat_i^T ]
/// with K_i the per-step kernel weighting (or the squared scalar kernel in
/// the whole-trajectory variant) and ghat_i the transported kernel
/// gradient.
Eigen::MatrixXd svgd_system(const std::vector<Trajectory>& particles,
                            const std::vector<Eigen::MatrixXd>& hessians,
                            int target, const SvgdOptions& options);

/// Solves A alpha = phi via LLT. On factorization failure, retries once
/// with 10x the baseline ridge added, then throws.
TangentField precondition_solve(Eigen::MatrixXd system,
                                const TangentField& phi);

}  // namespace ergocover
