#include "ergocover/solvers.hpp"

#include <Eigen/Cholesky>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace ergocover {

namespace {

constexpr double kMaxStepOmega = std::numbers::pi / 2.0;
constexpr double kGradFloor = 1e-14;
constexpr double kDampingMin = 1e-12;
constexpr double kDampingMax = 1e12;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void print_iteration(const char* tag, int iter, const IterStats& stats) {
  std::printf("[%s] iter=%d V_min=%.6e V_mean=%.6e V_max=%.6e step=%.3g "
              "damping=%.3g\n",
              tag, iter, stats.v_min, stats.v_mean, stats.v_max, stats.step,
              stats.damping);
}

struct SingleRun {
  std::vector<IterStats> trace;
  Trajectory trajectory;
  EnergyReport report;
  std::string status = "completed";
};

/// Damped Gauss-Newton with Armijo backtracking; shared by gn and batch_gn.
SingleRun gn_single(const Scene& scene, const SolverConfig& config,
                    const Trajectory& init, bool verbose) {
  SingleRun run;
  run.trajectory = init;
  double damping = config.damping_init;
  double v0 = -1.0;

  for (int iter = 0; iter < config.max_iters; ++iter) {
    const Linearization lin = linearize(run.trajectory, scene);
    const double v = lin.report.v_total;
    if (v0 < 0.0) v0 = v;
    IterStats stats{v, v, v, 0.0, damping};

    const Eigen::VectorXd grad = lin.gradient();
    if (grad.cwiseAbs().maxCoeff() < kGradFloor) {
      run.trace.push_back(stats);
      run.status = "converged";
      break;
    }

    Eigen::MatrixXd system = lin.gn_matrix();
    system.diagonal().array() += damping;
    TangentField direction = Eigen::LLT<Eigen::MatrixXd>(system).solve(-grad);
    direction = clip_rotation_norm(direction, kMaxStepOmega);
    double slope = grad.dot(direction);
    if (!(slope < 0.0)) {
      direction = clip_rotation_norm(-grad, kMaxStepOmega);
      slope = grad.dot(direction);
    }

    // Backtracking Armijo line search on the true (re-deposited) energy.
    double tau = 1.0;
    bool accepted = false;
    Trajectory candidate;
    double v_new = v;
    for (int ls = 0; ls <= config.max_line_search; ++ls) {
      candidate = retract(run.trajectory, tau * direction);
      v_new = total_energy(candidate, scene).v_total;
      if (v_new <= v + config.armijo_slope * tau * slope) {
        accepted = true;
        break;
      }
      tau *= config.armijo_shrink;
    }
    if (!accepted) {
      run.trace.push_back(stats);
      run.status = "stalled";
      break;
    }

    damping = tau == 1.0 ? std::max(damping * 0.5, kDampingMin)
                         : std::min(damping * 4.0, kDampingMax);
    stats.step = tau;
    stats.damping = damping;
    run.trace.push_back(stats);
    if (verbose) print_iteration("gn", iter, stats);
    run.trajectory = candidate;

    if (std::abs(v - v_new) < config.stop_tol * std::max(1.0, v0)) {
      run.status = "converged";
      break;
    }
    if (static_cast<int>(run.trace.size()) == config.max_iters)
      run.status = "max_iters";
  }
  run.report = total_energy(run.trajectory, scene);
  return run;
}

/// Projected gradient descent in the (t, q) chart: Euclidean gradients,
/// quaternions renormalized after every accepted step.
SingleRun pgd_single(const Scene& scene, const SolverConfig& config,
                     const Trajectory& init, bool verbose) {
  SingleRun run;
  Eigen::VectorXd params = pose_params(init);
  const int nt = init.size();
  double v0 = -1.0;

  for (int iter = 0; iter < config.max_iters; ++iter) {
    const Linearization lin = linearize_params(params, scene);
    const double v = lin.report.v_total;
    if (v0 < 0.0) v0 = v;
    IterStats stats{v, v, v, 0.0, 0.0};

    const Eigen::VectorXd grad = lin.gradient();
    if (grad.cwiseAbs().maxCoeff() < kGradFloor) {
      run.trace.push_back(stats);
      run.status = "converged";
      break;
    }

    const double slope = -grad.squaredNorm();
    double tau = 1.0;
    bool accepted = false;
    Eigen::VectorXd candidate;
    double v_new = v;
    for (int ls = 0; ls <= config.max_line_search; ++ls) {
      candidate = params - tau * grad;
      v_new = total_energy(trajectory_from_params(candidate), scene).v_total;
      if (v_new <= v + config.armijo_slope * tau * slope) {
        accepted = true;
        break;
      }
      tau *= config.armijo_shrink;
    }
    if (!accepted) {
      run.trace.push_back(stats);
      run.status = "stalled";
      break;
    }

    params = candidate;
    for (int t = 0; t < nt; ++t)
      params.segment<4>(7 * t + 3).normalize();  // project to the unit sphere

    stats.step = tau;
    run.trace.push_back(stats);
    if (verbose) print_iteration("pgd", iter, stats);
    if (std::abs(v - v_new) < config.stop_tol * std::max(1.0, v0)) {
      run.status = "converged";
      break;
    }
    if (static_cast<int>(run.trace.size()) == config.max_iters)
      run.status = "max_iters";
  }
  run.trajectory = trajectory_from_params(params);
  run.report = total_energy(run.trajectory, scene);
  return run;
}

IterStats particle_stats(const std::vector<double>& values) {
  IterStats stats;
  stats.v_min = *std::min_element(values.begin(), values.end());
  stats.v_max = *std::max_element(values.begin(), values.end());
  stats.v_mean = 0.0;
  for (double v : values) stats.v_mean += v;
  stats.v_mean /= static_cast<double>(values.size());
  return stats;
}

SolveReport finalize_particles(const Scene& scene, SolveReport report,
                               const std::vector<Trajectory>& particles) {
  report.final_reports.resize(particles.size());
  for (std::size_t i = 0; i < particles.size(); ++i)
    report.final_reports[i] = total_energy(particles[i], scene);
  report.best_index = 0;
  for (std::size_t i = 1; i < particles.size(); ++i)
    if (report.final_reports[i].v_total <
        report.final_reports[report.best_index].v_total)
      report.best_index = static_cast<int>(i);
  report.best_trajectory = particles[report.best_index];
  return report;
}

/// Fixed-step Stein iterations; preconditioned when `preconditioned`.
SolveReport run_stein(const Scene& scene, const SolverConfig& config,
                      const ParticleSet& init, bool preconditioned) {
  const auto start = Clock::now();
  std::vector<Trajectory> particles = init.particles;
  const int n = static_cast<int>(particles.size());

  SvgdOptions options;
  options.kernel_length = config.kernel_length;
  options.per_step_kernel = config.per_step_kernel;

  SolveReport report;
  report.method = method_to_string(preconditioned ? Method::kTsvec
                                                  : Method::kSe);
  report.seed = config.seed;
  report.init_hash = init.state_hash();

  std::vector<TangentField> grads_logp(n);
  std::vector<Eigen::MatrixXd> hessians(preconditioned ? n : 0);
  std::vector<double> values(n);

  for (int iter = 0; iter < config.max_iters; ++iter) {
    parallel_for(
        n,
        [&](std::size_t i) {
          const Linearization lin = linearize(particles[i], scene);
          values[i] = lin.report.v_total;
          grads_logp[i] = -lin.gradient();
          if (preconditioned) hessians[i] = lin.gn_matrix();
        },
        config.n_jobs);

    const std::vector<TangentField> field =
        svgd_direction(particles, grads_logp, options);

    std::vector<TangentField> updates(n);
    parallel_for(
        n,
        [&](std::size_t j) {
          if (preconditioned) {
            const Eigen::MatrixXd system = svgd_system(
                particles, hessians, static_cast<int>(j), options);
            updates[j] = precondition_solve(system, field[j]);
          } else {
            updates[j] = field[j];
          }
        },
        config.n_jobs);

    for (int j = 0; j < n; ++j) {
      const TangentField step = clip_rotation_norm(
          config.step_size * updates[j], kMaxStepOmega);
      particles[j] = retract(particles[j], step);
    }

    IterStats stats = particle_stats(values);
    stats.step = config.step_size;
    report.trace.push_back(stats);
    if (config.verbose)
      print_iteration(preconditioned ? "tsvec" : "se", iter, stats);
  }

  report.status = "completed";
  report.iterations = static_cast<int>(report.trace.size());
  report = finalize_particles(scene, std::move(report), particles);
  report.wall_time_s = seconds_since(start);
  return report;
}

SolveReport run_gn_batch(const Scene& scene, const SolverConfig& config,
                         const ParticleSet& init, bool batch) {
  const auto start = Clock::now();
  const std::vector<Trajectory>& starts = init.particles;
  const int n = batch ? static_cast<int>(starts.size()) : 1;

  std::vector<SingleRun> runs(n);
  parallel_for(
      n,
      [&](std::size_t i) {
        runs[i] = gn_single(scene, config, starts[i],
                            config.verbose && n == 1);
      },
      config.n_jobs);

  SolveReport report;
  report.method = method_to_string(batch ? Method::kBatchGn : Method::kGn);
  report.seed = config.seed;
  report.init_hash = init.state_hash();

  std::size_t longest = 0;
  for (const auto& r : runs) longest = std::max(longest, r.trace.size());
  for (std::size_t k = 0; k < longest; ++k) {
    std::vector<double> values(n);
    for (int i = 0; i < n; ++i)
      values[i] = k < runs[i].trace.size() ? runs[i].trace[k].v_min
                                           : runs[i].report.v_total;
    IterStats stats = particle_stats(values);
    stats.step = k < runs[0].trace.size() ? runs[0].trace[k].step : 0.0;
    stats.damping = k < runs[0].trace.size() ? runs[0].trace[k].damping : 0.0;
    report.trace.push_back(stats);
  }
  report.iterations = static_cast<int>(longest);
  report.status = runs[0].status;

  std::vector<Trajectory> finals(n);
  for (int i = 0; i < n; ++i) finals[i] = runs[i].trajectory;
  report = finalize_particles(scene, std::move(report), finals);
  // Status of the winning particle is the headline status.
  report.status = runs[report.best_index].status;
  report.wall_time_s = seconds_since(start);
  return report;
}

SolveReport run_pgd(const Scene& scene, const SolverConfig& config,
                    const ParticleSet& init) {
  const auto start = Clock::now();
  SingleRun run = pgd_single(scene, config, init.particles[0], config.verbose);
  SolveReport report;
  report.method = method_to_string(Method::kPgd);
  report.seed = config.seed;
  report.init_hash = init.state_hash();
  report.trace = run.trace;
  report.iterations = static_cast<int>(run.trace.size());
  report.status = run.status;
  report = finalize_particles(scene, std::move(report), {run.trajectory});
  report.wall_time_s = seconds_since(start);
  return report;
}

}  // namespace

Method method_from_string(const std::string& name) {
  if (name == "gn") return Method::kGn;
  if (name == "batch_gn") return Method::kBatchGn;
  if (name == "se") return Method::kSe;
  if (name == "tsvec") return Method::kTsvec;
  if (name == "pgd") return Method::kPgd;
  throw Error("unknown method '" + name +
              "' (expected gn, batch_gn, se, tsvec, or pgd)");
}

std::string method_to_string(Method method) {
  switch (method) {
    case Method::kGn: return "gn";
    case Method::kBatchGn: return "batch_gn";
    case Method::kSe: return "se";
    case Method::kTsvec: return "tsvec";
    case Method::kPgd: return "pgd";
  }
  throw Error("method_to_string: bad enum value");
}

std::uint64_t ParticleSet::state_hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& traj : particles) h = trajectory_hash(traj, h);
  return h;
}

Trajectory init_straight_line(const Scene& scene, int n_steps) {
  if (n_steps < 3) throw Error("init_straight_line: need n_steps >= 3");
  std::vector<int> roi;
  for (int i = 0; i < scene.cloud.size(); ++i)
    if (scene.cloud.roi_weight(i) > 0.0) roi.push_back(i);
  if (roi.size() < 2)
    throw Error("init_straight_line: need at least 2 ROI nodes with "
                "positive weight");

  // Most distant ROI pair; ties resolved lexicographically.
  int best_a = roi[0], best_b = roi[1];
  double best_d2 = -1.0;
  for (std::size_t i = 0; i + 1 < roi.size(); ++i) {
    for (std::size_t j = i + 1; j < roi.size(); ++j) {
      const double d2 = (scene.cloud.points.row(roi[i]) -
                         scene.cloud.points.row(roi[j]))
                            .squaredNorm();
      if (d2 > best_d2) {
        best_d2 = d2;
        best_a = roi[i];
        best_b = roi[j];
      }
    }
  }

  const Vec3 a = scene.cloud.points.row(best_a);
  const Vec3 b = scene.cloud.points.row(best_b);
  Trajectory traj;
  traj.poses.resize(n_steps);
  for (int t = 0; t < n_steps; ++t) {
    const double s = static_cast<double>(t) / (n_steps - 1);
    traj.poses[t].rotation = Mat3::Identity();
    traj.poses[t].translation = (1.0 - s) * a + s * b;
  }
  return traj;
}

ParticleSet perturb_particles(const Trajectory& traj, int n_particles,
                              double noise_var, std::uint64_t seed) {
  if (n_particles < 1) throw Error("perturb_particles: need n_particles >= 1");
  if (n_particles > 1 && noise_var <= 0.0)
    throw Error("perturb_particles: noise_var must be positive for more "
                "than one particle (overlapping particles break the kernel "
                "gradients)");
  ParticleSet set;
  set.rng_seed = seed;
  set.particles.reserve(n_particles);
  set.particles.push_back(traj);  // particle 0: deterministic baseline
  const double sigma = std::sqrt(std::max(noise_var, 0.0));
  for (int i = 1; i < n_particles; ++i) {
    Trajectory p = traj;
    for (int t = 0; t < p.size(); ++t) {
      Rng rng(mix_keys({seed, static_cast<std::uint64_t>(i),
                        static_cast<std::uint64_t>(t)}));
      Twist noise;
      for (int a = 0; a < 6; ++a) noise(a) = sigma * rng.normal();
      p.poses[t] = lie::oplus(p.poses[t], noise);
    }
    set.particles.push_back(std::move(p));
  }
  return set;
}

ParticleSet initial_particles(const Scene& scene, const SolverConfig& config) {
  const Trajectory line = init_straight_line(scene, config.n_steps);
  const bool multi = config.method == Method::kBatchGn ||
                     config.method == Method::kSe ||
                     config.method == Method::kTsvec;
  const int n = multi ? config.n_particles : 1;
  return perturb_particles(line, n, n > 1 ? config.noise_var : 0.0,
                           config.seed);
}

SolveReport run_solver_from(const Scene& scene, const SolverConfig& config,
                            const ParticleSet& init) {
  if (init.particles.empty()) throw Error("run_solver_from: empty init");
  switch (config.method) {
    case Method::kGn: return run_gn_batch(scene, config, init, false);
    case Method::kBatchGn: return run_gn_batch(scene, config, init, true);
    case Method::kSe: return run_stein(scene, config, init, false);
    case Method::kTsvec: return run_stein(scene, config, init, true);
    case Method::kPgd: return run_pgd(scene, config, init);
  }
  throw Error("run_solver_from: bad method enum");
}

SolveReport run_solver(const Scene& scene, const SolverConfig& config) {
  return run_solver_from(scene, config, initial_particles(scene, config));
}

std::string solve_report_to_json(const SolveReport& report,
                                 bool include_timing) {
  nlohmann::json j;
  j["method"] = report.method;
  j["seed"] = report.seed;
  j["status"] = report.status;
  j["iterations"] = report.iterations;
  j["wall_time_s"] = include_timing ? report.wall_time_s : 0.0;
  j["best_index"] = report.best_index;
  j["init_hash"] = report.init_hash;

  nlohmann::json trace = nlohmann::json::array();
  for (const auto& s : report.trace)
    trace.push_back({{"v_min", s.v_min},
                     {"v_mean", s.v_mean},
                     {"v_max", s.v_max},
                     {"step", s.step},
                     {"damping", s.damping}});
  j["trace"] = std::move(trace);

  nlohmann::json finals = nlohmann::json::array();
  for (const auto& r : report.final_reports)
    finals.push_back({{"v_s", r.v_s},
                      {"v_a", r.v_a},
                      {"v_f", r.v_f},
                      {"v_e", r.v_e},
                      {"v", r.v_total}});
  j["final"] = std::move(finals);

  nlohmann::json poses = nlohmann::json::array();
  for (const auto& p : report.best_trajectory.poses) {
    const Eigen::Vector4d q = lie::quat_from_rotation(p.rotation);
    poses.push_back({p.translation.x(), p.translation.y(), p.translation.z(),
                     q(0), q(1), q(2), q(3)});
  }
  j["best_trajectory"] = std::move(poses);
  return j.dump(2);
}

}  // namespace ergocover
