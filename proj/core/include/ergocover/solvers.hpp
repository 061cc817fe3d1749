#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ergocover/energy.hpp"
#include "ergocover/svgd.hpp"
#include "ergocover/trajectory.hpp"

namespace ergocover {

enum class Method { kGn, kBatchGn, kSe, kTsvec, kPgd };

Method method_from_string(const std::string& name);
std::string method_to_string(Method method);

/// Trajectory particles sharing one N_t. Initialization guarantees that no
/// two particles coincide (particle 0 carries zero noise, the rest are
/// perturbed everywhere).
struct ParticleSet {
  std::vector<Trajectory> particles;
  std::uint64_t rng_seed = 0;

  int count() const { return static_cast<int>(particles.size()); }
  std::uint64_t state_hash() const;
};

struct SolverConfig {
  Method method = Method::kGn;
  int n_steps = 50;
  double step_size = 0.1;      ///< fixed step for se/tsvec
  int max_iters = 200;
  double stop_tol = 1e-4;      ///< relative: |dV| < stop_tol * max(1, V0)
  double kernel_length = 0.05;
  int n_particles = 16;
  double noise_var = 0.005;
  double damping_init = 1e-3;
  double armijo_slope = 1e-4;
  double armijo_shrink = 0.5;
  int max_line_search = 20;
  bool per_step_kernel = true;
  std::uint64_t seed = 0;
  int n_jobs = 1;
  bool verbose = false;
};

struct IterStats {
  double v_min = 0.0;
  double v_mean = 0.0;
  double v_max = 0.0;
  double step = 0.0;     ///< accepted step factor (line-searched methods)
  double damping = 0.0;  ///< GN damping after the iteration
};

struct SolveReport {
  std::string method;
  std::uint64_t seed = 0;
  std::string status;  ///< "converged", "completed", "max_iters", "stalled"
  int iterations = 0;
  double wall_time_s = 0.0;
  std::vector<IterStats> trace;
  std::vector<EnergyReport> final_reports;  ///< one per particle
  int best_index = 0;
  Trajectory best_trajectory;
  std::uint64_t init_hash = 0;  ///< hash of the initial particle set

  const EnergyReport& best() const { return final_reports[best_index]; }
};

/// Straight line between the two most distant positive-weight ROI nodes,
/// rotations aligned with the world frame.
Trajectory init_straight_line(const Scene& scene, int n_steps);

/// Particle 0 is the input unchanged; particles 1..n-1 perturb every pose
/// by a twist drawn from N(0, noise_var I6), streams keyed by (seed, i, t).
ParticleSet perturb_particles(const Trajectory& traj, int n_particles,
                              double noise_var, std::uint64_t seed);

/// Builds the initial particle set a solver run would use (shared across
/// methods for fairness checks). Single-trajectory methods get one
/// zero-noise particle.
ParticleSet initial_particles(const Scene& scene, const SolverConfig& config);

/// Runs the configured method from its canonical initialization.
SolveReport run_solver(const Scene& scene, const SolverConfig& config);

/// Runs from an explicit particle set (shared-seed benchmark path).
SolveReport run_solver_from(const Scene& scene, const SolverConfig& config,
                            const ParticleSet& init);

/// JSON serialization. include_timing=false zeroes the wall-time field so
/// byte-level determinism comparisons are meaningful.
std::string solve_report_to_json(const SolveReport& report,
                                 bool include_timing = true);

}  // namespace ergocover
