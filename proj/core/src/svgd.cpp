#include "ergocover/svgd.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>

namespace ergocover {

namespace {

void check_same_length(const Trajectory& x, const Trajectory& x_ref) {
  if (x.size() != x_ref.size())
    throw Error("svgd: trajectories must share N_t");
}

/// Per-step relative twists delta_t = x_t (-) x'_t.
std::vector<Twist> relative_twists(const Trajectory& x,
                                   const Trajectory& x_ref) {
  check_same_length(x, x_ref);
  std::vector<Twist> out(x.size());
  for (int t = 0; t < x.size(); ++t)
    out[t] = lie::ominus(x.poses[t], x_ref.poses[t]);
  return out;
}

}  // namespace

Eigen::VectorXd per_step_kernel(const Trajectory& x, const Trajectory& x_ref,
                                double kernel_length) {
  if (kernel_length <= 0.0) throw Error("svgd: kernel_length must be positive");
  const auto deltas = relative_twists(x, x_ref);
  Eigen::VectorXd k(x.size());
  for (int t = 0; t < x.size(); ++t)
    k(t) = std::exp(-deltas[t].squaredNorm() / kernel_length);
  return k;
}

double traj_kernel(const Trajectory& x, const Trajectory& x_ref,
                   double kernel_length) {
  return per_step_kernel(x, x_ref, kernel_length).sum();
}

TangentField kernel_grad1(const Trajectory& x, const Trajectory& x_ref,
                          double kernel_length) {
  if (kernel_length <= 0.0) throw Error("svgd: kernel_length must be positive");
  const auto deltas = relative_twists(x, x_ref);
  TangentField grad = TangentField::Zero(6 * x.size());
  for (int t = 0; t < x.size(); ++t) {
    const double kappa = std::exp(-deltas[t].squaredNorm() / kernel_length);
    // d||log(A x)||^2 in the right-perturbation chart: 2 Jr^-T(delta) delta.
    field_block(grad, t) =
        (-2.0 / kernel_length) * kappa *
        (lie::se3_right_jacobian_inv(deltas[t]).transpose() * deltas[t]);
  }
  return grad;
}

std::vector<TangentField> svgd_direction(
    const std::vector<Trajectory>& particles,
    const std::vector<TangentField>& grads_logp, const SvgdOptions& options) {
  const int n = static_cast<int>(particles.size());
  if (n == 0) throw Error("svgd_direction: empty particle set");
  if (grads_logp.size() != particles.size())
    throw Error("svgd_direction: one gradient per particle required");
  const int nt = particles[0].size();
  const double l = options.kernel_length;

  std::vector<TangentField> out(n, TangentField::Zero(6 * nt));
  for (int j = 0; j < n; ++j) {
    const Trajectory& target = particles[j];
    TangentField acc = TangentField::Zero(6 * nt);
    for (int i = 0; i < n; ++i) {
      if (i == j) {
        // Self term: per-step kernel is exactly 1, its gradient 0, and
        // transport the identity.
        if (options.per_step_kernel) {
          acc += grads_logp[j];
        } else {
          acc += static_cast<double>(nt) * grads_logp[j];
        }
        continue;
      }
      const auto deltas = relative_twists(particles[i], target);
      double k_scalar = 0.0;
      Eigen::VectorXd kappa(nt);
      for (int t = 0; t < nt; ++t) {
        const double d2 = deltas[t].squaredNorm();
        if (d2 == 0.0)
          throw Error(
              "svgd_direction: particles " + std::to_string(i) + " and " +
              std::to_string(j) + " overlap at timestep " + std::to_string(t) +
              "; re-noise the particle set (noise_var > 0)");
        kappa(t) = std::exp(-d2 / l);
        k_scalar += kappa(t);
      }
      for (int t = 0; t < nt; ++t) {
        const Twist grad_k =
            (-2.0 / l) * kappa(t) *
            (lie::se3_right_jacobian_inv(deltas[t]).transpose() * deltas[t]);
        const double factor = options.per_step_kernel ? kappa(t) : k_scalar;
        Twist psi = factor * field_block(grads_logp[i], t) + grad_k;
        if (options.use_transport) {
          // P_{X_i -> X'}: Ad of (x'^-1 x_i) per step.
          psi = lie::adjoint(target.poses[t].inverse() *
                             particles[i].poses[t]) *
                psi;
        }
        field_block(acc, t) += psi;
      }
    }
    out[j] = acc / static_cast<double>(n);
  }
  return out;
}

Eigen::MatrixXd svgd_system(const std::vector<Trajectory>& particles,
                            const std::vector<Eigen::MatrixXd>& hessians,
                            int target, const SvgdOptions& options) {
  const int n = static_cast<int>(particles.size());
  if (hessians.size() != particles.size())
    throw Error("svgd_system: one Hessian per particle required");
  if (target < 0 || target >= n) throw Error("svgd_system: bad target index");
  const int nt = particles[0].size();
  const int dim = 6 * nt;

  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < n; ++i) {
    if (hessians[i].rows() != dim || hessians[i].cols() != dim)
      throw Error("svgd_system: Hessian size mismatch");
    if (i == target) {
      // Self: kernel weights are 1 per step (N_t for the scalar variant)
      // and the kernel gradient vanishes.
      if (options.per_step_kernel) {
        system += hessians[i];
      } else {
        system += static_cast<double>(nt * nt) * hessians[i];
      }
      continue;
    }
    const Eigen::VectorXd kappa =
        per_step_kernel(particles[i], particles[target],
                        options.kernel_length);
    TangentField ghat =
        kernel_grad1(particles[i], particles[target], options.kernel_length);
    if (options.use_transport) {
      for (int t = 0; t < nt; ++t)
        field_block(ghat, t) =
            lie::adjoint(particles[target].poses[t].inverse() *
                         particles[i].poses[t]) *
            field_block(ghat, t);
    }
    if (options.per_step_kernel) {
      Eigen::VectorXd scale(dim);
      for (int t = 0; t < nt; ++t)
        scale.segment<6>(6 * t).setConstant(kappa(t));
      system.noalias() +=
          scale.asDiagonal() * hessians[i] * scale.asDiagonal();
    } else {
      const double k = kappa.sum();
      system.noalias() += (k * k) * hessians[i];
    }
    system.noalias() += ghat * ghat.transpose();
  }
  return system;
}

TangentField precondition_solve(Eigen::MatrixXd system,
                                const TangentField& phi) {
  if (system.rows() != phi.size())
    throw Error("precondition_solve: size mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() == Eigen::Success) return llt.solve(phi);
  // One retry with 10x the baseline ridge.
  const double retry =
      10.0 * (1e-8 * system.trace() / system.rows() + 1e-12);
  system.diagonal().array() += retry;
  llt.compute(system);
  if (llt.info() == Eigen::Success) return llt.solve(phi);
  throw Error("precondition_solve: factorization failed twice (system is "
              "not positive definite)");
}

}  // namespace ergocover
