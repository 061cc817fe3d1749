#pragma once

#include <vector>

#include <Eigen/Core>

#include "ergocover/lie.hpp"

namespace ergocover {

/// One optimization particle: an ordered sequence of poses.
/// Energies require at least 3 poses (smoothness spans three consecutive).
struct Trajectory {
  std::vector<lie::Pose> poses;

  int size() const { return static_cast<int>(poses.size()); }

  /// Positions as an N_t x 3 matrix.
  Eigen::MatrixX3d positions() const {
    Eigen::MatrixX3d out(size(), 3);
    for (int t = 0; t < size(); ++t) out.row(t) = poses[t].translation;
    return out;
  }
};

/// Per-timestep twists for a whole trajectory, flattened to R^{6 N_t}
/// in timestep-major order: segment(6t, 6) belongs to pose t.
using TangentField = Eigen::VectorXd;

inline Eigen::Ref<Vec6> field_block(TangentField& f, int t) {
  return f.segment<6>(6 * t);
}
inline Vec6 field_block(const TangentField& f, int t) {
  return f.segment<6>(6 * t);
}

/// traj (+) field applied per timestep.
Trajectory retract(const Trajectory& traj, const TangentField& field);

/// Per-step twist clipping: any step whose rotational part exceeds
/// max_omega is rescaled (whole 6-vector, direction preserved) so the
/// retraction stays clear of the log branch cut.
TangentField clip_rotation_norm(const TangentField& field, double max_omega);

/// FNV hash over all pose entries; used for determinism / fairness checks.
std::uint64_t trajectory_hash(const Trajectory& traj,
                              std::uint64_t seed = 1469598103934665603ull);

}  // namespace ergocover
