#include "ergocover/energy.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace ergocover {

namespace {

constexpr double kFdStep = 1e-6;

struct Layout {
  int nt = 0;
  int n_modes = 0;
  int smooth_rows() const { return 6 * (nt - 2); }
  int align0() const { return smooth_rows(); }
  int attach0() const { return smooth_rows() + nt; }
  int erg0() const { return smooth_rows() + 2 * nt; }
  int rows() const { return smooth_rows() + 2 * nt + n_modes; }
};

const lie::Pose& pose_at(const std::vector<lie::Pose>& poses, int i,
                         int sub_idx, const lie::Pose* sub) {
  return i == sub_idx ? *sub : poses[i];
}

/// Smoothness residual block for interior step s (poses s-1, s, s+1),
/// optionally with one pose substituted.
Vec6 smooth_block(const std::vector<lie::Pose>& poses, int s, double sqrt_ws,
                  int sub_idx = -1, const lie::Pose* sub = nullptr) {
  const lie::Pose& prev = pose_at(poses, s - 1, sub_idx, sub);
  const lie::Pose& mid = pose_at(poses, s, sub_idx, sub);
  const lie::Pose& next = pose_at(poses, s + 1, sub_idx, sub);
  return sqrt_ws * (lie::ominus(next, mid) - lie::ominus(mid, prev));
}

/// Frozen K-nearest-neighbor deposition state at the linearization point.
struct DepositCache {
  std::vector<std::vector<int>> plan;       // node indices per step
  std::vector<std::vector<double>> base_w;  // kernel weights per step
  Eigen::VectorXd basis_accum;              // eigvecs^T u
  double total = 0.0;
  double inv_two_sigma2 = 0.0;
};

DepositCache build_deposit_cache(const std::vector<lie::Pose>& poses,
                                 const Scene& scene) {
  const auto& dep = scene.deposit;
  if (dep.k_neighbors < 1 || dep.k_neighbors > scene.cloud.size())
    throw Error("energy: need 1 <= K <= N for deposition");
  if (dep.sigma_a <= 0.0) throw Error("energy: sigma_a must be positive");
  DepositCache cache;
  cache.inv_two_sigma2 = 1.0 / (2.0 * dep.sigma_a * dep.sigma_a);
  const int nt = static_cast<int>(poses.size());
  cache.plan.resize(nt);
  cache.base_w.resize(nt);
  cache.basis_accum = Eigen::VectorXd::Zero(scene.basis.n_modes());
  for (int t = 0; t < nt; ++t) {
    const auto hits =
        scene.cloud.kd->knn(poses[t].translation, dep.k_neighbors);
    cache.plan[t].reserve(hits.size());
    cache.base_w[t].reserve(hits.size());
    for (const auto& h : hits) {
      const double w = std::exp(-h.sq_dist * cache.inv_two_sigma2);
      cache.plan[t].push_back(h.index);
      cache.base_w[t].push_back(w);
      cache.total += w;
      cache.basis_accum += w * scene.basis.eigvecs.row(h.index).transpose();
    }
  }
  if (cache.total <= 0.0)
    throw Error("energy: deposition collapsed to zero mass");
  return cache;
}

struct BaseEval {
  Layout layout;
  Eigen::VectorXd residual;
  EnergyReport report;
  DepositCache deposit;
  Eigen::VectorXd sqrt_we_lambda;  // per-mode sqrt(w_e * Lambda_i)
  double sqrt_ws = 0.0, sqrt_wa = 0.0, sqrt_wf = 0.0;
};

BaseEval evaluate_base(const std::vector<lie::Pose>& poses,
                       const Scene& scene) {
  const int nt = static_cast<int>(poses.size());
  if (nt < 3) throw Error("energy: trajectory needs at least 3 poses");
  BaseEval base;
  base.layout = Layout{nt, scene.basis.n_modes()};
  base.sqrt_ws = std::sqrt(scene.weights.w_s);
  base.sqrt_wa = std::sqrt(scene.weights.w_a);
  base.sqrt_wf = std::sqrt(scene.weights.w_f);
  base.sqrt_we_lambda =
      (scene.weights.w_e * scene.basis.lambda_weights.array())
          .sqrt()
          .matrix();
  base.deposit = build_deposit_cache(poses, scene);

  const Layout& lay = base.layout;
  base.residual = Eigen::VectorXd::Zero(lay.rows());
  for (int s = 1; s <= nt - 2; ++s)
    base.residual.segment<6>(6 * (s - 1)) =
        smooth_block(poses, s, base.sqrt_ws);
  for (int t = 0; t < nt; ++t) {
    const SdfSample s = scene.sdf->eval(poses[t].translation);
    base.residual(lay.align0() + t) =
        base.sqrt_wa * (poses[t].z_axis().dot(s.grad) - 1.0);
    base.residual(lay.attach0() + t) = base.sqrt_wf * s.value;
  }
  const Eigen::VectorXd c = base.deposit.basis_accum / base.deposit.total;
  base.residual.segment(lay.erg0(), lay.n_modes) =
      (base.sqrt_we_lambda.array() * (c - scene.c_target).array()).matrix();

  base.report.v_s = 0.5 * base.residual.head(lay.smooth_rows()).squaredNorm();
  base.report.v_a =
      0.5 * base.residual.segment(lay.align0(), nt).squaredNorm();
  base.report.v_f =
      0.5 * base.residual.segment(lay.attach0(), nt).squaredNorm();
  base.report.v_e =
      0.5 * base.residual.segment(lay.erg0(), lay.n_modes).squaredNorm();
  base.report.v_total =
      base.report.v_s + base.report.v_a + base.report.v_f + base.report.v_e;
  return base;
}

/// Ergodic residual rows after replacing step t's position, with the
/// neighbor assignment frozen.
Eigen::VectorXd ergodic_rows_at(const BaseEval& base, const Scene& scene,
                                int t, const Eigen::Vector3d& position) {
  const auto& dep = base.deposit;
  Eigen::VectorXd accum = dep.basis_accum;
  double total = dep.total;
  for (std::size_t j = 0; j < dep.plan[t].size(); ++j) {
    const int node = dep.plan[t][j];
    const double d2 =
        (scene.cloud.points.row(node).transpose() - position).squaredNorm();
    const double delta =
        std::exp(-d2 * dep.inv_two_sigma2) - dep.base_w[t][j];
    total += delta;
    accum += delta * scene.basis.eigvecs.row(node).transpose();
  }
  const Eigen::VectorXd c = accum / total;
  return (base.sqrt_we_lambda.array() * (c - scene.c_target).array())
      .matrix();
}

struct ProbeRows {
  std::vector<std::pair<int, Vec6>> smooth;  // (row offset, block)
  double align = 0.0;
  double attach = 0.0;
  Eigen::VectorXd ergodic;  // empty when position unchanged
};

ProbeRows eval_probe(const std::vector<lie::Pose>& poses, const Scene& scene,
                     const BaseEval& base, int t, const lie::Pose& probe,
                     bool position_changed) {
  const Layout& lay = base.layout;
  ProbeRows out;
  if (scene.weights.w_s > 0.0) {
    for (int s = std::max(1, t - 1); s <= std::min(lay.nt - 2, t + 1); ++s)
      out.smooth.emplace_back(6 * (s - 1),
                              smooth_block(poses, s, base.sqrt_ws, t, &probe));
  }
  if (scene.weights.w_a > 0.0 ||
      (position_changed && scene.weights.w_f > 0.0)) {
    const SdfSample s = scene.sdf->eval(probe.translation);
    out.align = base.sqrt_wa * (probe.z_axis().dot(s.grad) - 1.0);
    out.attach = base.sqrt_wf * s.value;
  }
  if (position_changed && scene.weights.w_e > 0.0)
    out.ergodic = ergodic_rows_at(base, scene, t, probe.translation);
  return out;
}

void write_column(Eigen::MatrixXd& jacobian, const Layout& lay, int col,
                  int t, const ProbeRows& plus, const ProbeRows& minus,
                  bool position_changed, const Scene& scene) {
  const double inv = 1.0 / (2.0 * kFdStep);
  for (std::size_t i = 0; i < plus.smooth.size(); ++i)
    jacobian.block<6, 1>(plus.smooth[i].first, col) =
        inv * (plus.smooth[i].second - minus.smooth[i].second);
  if (scene.weights.w_a > 0.0)
    jacobian(lay.align0() + t, col) = inv * (plus.align - minus.align);
  if (position_changed && scene.weights.w_f > 0.0)
    jacobian(lay.attach0() + t, col) = inv * (plus.attach - minus.attach);
  if (position_changed && scene.weights.w_e > 0.0)
    jacobian.block(lay.erg0(), col, lay.n_modes, 1) =
        inv * (plus.ergodic - minus.ergodic);
}

void check_finite(const Linearization& lin) {
  if (lin.residual.allFinite() && lin.jacobian.allFinite()) return;
  const int per_pose = lin.tangent_chart ? 6 : 7;
  for (int col = 0; col < lin.jacobian.cols(); ++col) {
    if (!lin.jacobian.col(col).allFinite())
      throw Error("energy: non-finite gradient at timestep " +
                  std::to_string(col / per_pose));
  }
  throw Error("energy: non-finite residual");
}

}  // namespace

// --- individual terms ----------------------------------------------------------

double eval_smoothness(const Trajectory& traj, double w_s) {
  if (traj.size() < 3) throw Error("eval_smoothness: need at least 3 poses");
  double acc = 0.0;
  for (int s = 1; s <= traj.size() - 2; ++s)
    acc += smooth_block(traj.poses, s, 1.0).squaredNorm();
  return 0.5 * w_s * acc;
}

double eval_align(const Trajectory& traj, const Sdf& sdf, double w_a) {
  double acc = 0.0;
  for (const auto& p : traj.poses) {
    const double d = p.z_axis().dot(sdf.grad(p.translation)) - 1.0;
    acc += d * d;
  }
  return 0.5 * w_a * acc;
}

double eval_attach(const Trajectory& traj, const Sdf& sdf, double w_f) {
  double acc = 0.0;
  for (const auto& p : traj.poses) {
    const double v = sdf.value(p.translation);
    acc += v * v;
  }
  return 0.5 * w_f * acc;
}

double eval_ergodic(const Trajectory& traj, const PointCloudSurface& cloud,
                    const SpectralBasis& basis,
                    const Eigen::VectorXd& c_target, double w_e, int k,
                    double sigma_a) {
  const Eigen::VectorXd phi = deposit_trajectory(traj, cloud, k, sigma_a);
  const Eigen::VectorXd c = target_coeffs(phi, basis);
  return 0.5 * w_e *
         (basis.lambda_weights.array() * (c - c_target).array().square())
             .sum();
}

EnergyReport total_energy(const Trajectory& traj, const Scene& scene) {
  EnergyReport r;
  r.v_s = eval_smoothness(traj, scene.weights.w_s);
  r.v_a = eval_align(traj, *scene.sdf, scene.weights.w_a);
  r.v_f = eval_attach(traj, *scene.sdf, scene.weights.w_f);
  r.v_e = eval_ergodic(traj, scene.cloud, scene.basis, scene.c_target,
                       scene.weights.w_e, scene.deposit.k_neighbors,
                       scene.deposit.sigma_a);
  r.v_total = r.v_s + r.v_a + r.v_f + r.v_e;
  return r;
}

// --- Linearization ----------------------------------------------------------------

double Linearization::ridge() const {
  return 1e-8 * jacobian.squaredNorm() / dof() + 1e-12;
}

Eigen::MatrixXd Linearization::gn_matrix() const {
  const int n = dof();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  if (!tangent_chart) {
    h = jacobian.transpose() * jacobian;
    h.diagonal().array() += ridge();
    return h;
  }
  const Layout lay{n_steps, n_modes};
  // Smoothness: block-tridiagonal, 18 columns per interior step.
  for (int s = 1; s <= lay.nt - 2; ++s) {
    const int c0 = 6 * (s - 1);
    const auto jb = jacobian.block(6 * (s - 1), c0, 6, 18);
    h.block(c0, c0, 18, 18) += jb.transpose() * jb;
  }
  // Alignment: one row per step over that step's 6 columns.
  for (int t = 0; t < lay.nt; ++t) {
    const auto row = jacobian.block(lay.align0() + t, 6 * t, 1, 6);
    h.block(6 * t, 6 * t, 6, 6) += row.transpose() * row;
  }
  // Attachment: translation columns only.
  for (int t = 0; t < lay.nt; ++t) {
    const auto row = jacobian.block(lay.attach0() + t, 6 * t + 3, 1, 3);
    h.block(6 * t + 3, 6 * t + 3, 3, 3) += row.transpose() * row;
  }
  // Ergodic: dense coupling over all translation coordinates.
  if (n_modes > 0) {
    Eigen::MatrixXd compact(n_modes, 3 * lay.nt);
    for (int t = 0; t < lay.nt; ++t)
      compact.middleCols<3>(3 * t) =
          jacobian.block(lay.erg0(), 6 * t + 3, n_modes, 3);
    const Eigen::MatrixXd coupled = compact.transpose() * compact;
    for (int a = 0; a < lay.nt; ++a)
      for (int b = 0; b < lay.nt; ++b)
        h.block<3, 3>(6 * a + 3, 6 * b + 3) +=
            coupled.block<3, 3>(3 * a, 3 * b);
  }
  h.diagonal().array() += ridge();
  return h;
}

Linearization linearize(const Trajectory& traj, const Scene& scene) {
  const auto& poses = traj.poses;
  const BaseEval base = evaluate_base(poses, scene);
  const Layout& lay = base.layout;

  Linearization lin;
  lin.report = base.report;
  lin.residual = base.residual;
  lin.n_steps = lay.nt;
  lin.n_modes = lay.n_modes;
  lin.tangent_chart = true;
  lin.jacobian = Eigen::MatrixXd::Zero(lay.rows(), 6 * lay.nt);

  for (int t = 0; t < lay.nt; ++t) {
    for (int a = 0; a < 6; ++a) {
      // Pure-rotation probes leave the position bit-exactly unchanged, so
      // the attachment and ergodic rows drop out structurally.
      const bool position_changed = a >= 3;
      Vec6 step = Vec6::Zero();
      step(a) = kFdStep;
      const lie::Pose plus = lie::oplus(poses[t], step);
      const lie::Pose minus = lie::oplus(poses[t], -step);
      const ProbeRows rp =
          eval_probe(poses, scene, base, t, plus, position_changed);
      const ProbeRows rm =
          eval_probe(poses, scene, base, t, minus, position_changed);
      write_column(lin.jacobian, lay, 6 * t + a, t, rp, rm, position_changed,
                   scene);
    }
  }
  check_finite(lin);
  return lin;
}

TangentField grad_energy(const Trajectory& traj, const Scene& scene) {
  return linearize(traj, scene).gradient();
}

Eigen::MatrixXd gn_hessian(const Trajectory& traj, const Scene& scene) {
  return linearize(traj, scene).gn_matrix();
}

// --- quaternion chart ---------------------------------------------------------------

Eigen::VectorXd pose_params(const Trajectory& traj) {
  Eigen::VectorXd params(7 * traj.size());
  for (int t = 0; t < traj.size(); ++t) {
    params.segment<3>(7 * t) = traj.poses[t].translation;
    params.segment<4>(7 * t + 3) =
        lie::quat_from_rotation(traj.poses[t].rotation);
  }
  return params;
}

Trajectory trajectory_from_params(const Eigen::VectorXd& params) {
  if (params.size() % 7 != 0)
    throw Error("trajectory_from_params: length must be a multiple of 7");
  Trajectory traj;
  const int nt = static_cast<int>(params.size() / 7);
  traj.poses.resize(nt);
  for (int t = 0; t < nt; ++t) {
    traj.poses[t].translation = params.segment<3>(7 * t);
    traj.poses[t].rotation =
        lie::rotation_from_quat(params.segment<4>(7 * t + 3));
  }
  return traj;
}

Linearization linearize_params(const Eigen::VectorXd& params,
                               const Scene& scene) {
  const Trajectory traj = trajectory_from_params(params);
  const auto& poses = traj.poses;
  const BaseEval base = evaluate_base(poses, scene);
  const Layout& lay = base.layout;

  Linearization lin;
  lin.report = base.report;
  lin.residual = base.residual;
  lin.n_steps = lay.nt;
  lin.n_modes = lay.n_modes;
  lin.tangent_chart = false;
  lin.jacobian = Eigen::MatrixXd::Zero(lay.rows(), 7 * lay.nt);

  for (int t = 0; t < lay.nt; ++t) {
    for (int a = 0; a < 7; ++a) {
      const bool position_changed = a < 3;  // quaternion coords keep it fixed
      Eigen::Matrix<double, 7, 1> p7 = params.segment<7>(7 * t);
      lie::Pose plus, minus;
      p7(a) += kFdStep;
      plus.translation = p7.head<3>();
      plus.rotation = lie::rotation_from_quat(p7.tail<4>());
      p7(a) -= 2.0 * kFdStep;
      minus.translation = p7.head<3>();
      minus.rotation = lie::rotation_from_quat(p7.tail<4>());
      const ProbeRows rp =
          eval_probe(poses, scene, base, t, plus, position_changed);
      const ProbeRows rm =
          eval_probe(poses, scene, base, t, minus, position_changed);
      write_column(lin.jacobian, lay, 7 * t + a, t, rp, rm, position_changed,
                   scene);
    }
  }
  check_finite(lin);
  return lin;
}

}  // namespace ergocover
