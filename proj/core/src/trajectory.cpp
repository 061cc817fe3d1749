#include "ergocover/trajectory.hpp"

namespace ergocover {

Trajectory retract(const Trajectory& traj, const TangentField& field) {
  if (field.size() != 6 * traj.size())
    throw Error("retract: tangent field length does not match trajectory");
  Trajectory out;
  out.poses.reserve(traj.poses.size());
  for (int t = 0; t < traj.size(); ++t)
    out.poses.push_back(lie::oplus(traj.poses[t], field_block(field, t)));
  return out;
}

TangentField clip_rotation_norm(const TangentField& field, double max_omega) {
  TangentField out = field;
  const int n = static_cast<int>(field.size() / 6);
  for (int t = 0; t < n; ++t) {
    const double w = out.segment<3>(6 * t).norm();
    if (w > max_omega) out.segment<6>(6 * t) *= max_omega / w;
  }
  return out;
}

std::uint64_t trajectory_hash(const Trajectory& traj, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (const auto& p : traj.poses) {
    h = fnv1a(p.rotation.data(), sizeof(double) * 9, h);
    h = fnv1a(p.translation.data(), sizeof(double) * 3, h);
  }
  return h;
}

}  // namespace ergocover
