#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>

#include "ergocover/kdtree.hpp"
#include "ergocover/util.hpp"

namespace ergocover {

/// One signed-distance query result. `grad` is always unit length;
/// `clamped` marks grid queries that fell outside the grid bounds and were
/// evaluated at the clamped position.
struct SdfSample {
  double value = 0.0;
  Eigen::Vector3d grad = Eigen::Vector3d::UnitZ();
  bool clamped = false;
};

/// Signed distance field: zero on the surface, positive outside, gradient
/// normalized to unit length. Throws Error when the gradient norm before
/// normalization is below 1e-8 (medial axis).
class Sdf {
 public:
  virtual ~Sdf() = default;
  virtual SdfSample eval(const Eigen::Vector3d& x) const = 0;

  double value(const Eigen::Vector3d& x) const { return eval(x).value; }
  Eigen::Vector3d grad(const Eigen::Vector3d& x) const { return eval(x).grad; }
};

class SphereSdf final : public Sdf {
 public:
  SphereSdf(const Eigen::Vector3d& center, double radius);
  SdfSample eval(const Eigen::Vector3d& x) const override;

 private:
  Eigen::Vector3d center_;
  double radius_;
};

/// Torus around the z-axis through `center`:
///   value = sqrt((sqrt(x^2+y^2) - R_major)^2 + z^2) - r_minor
class TorusSdf final : public Sdf {
 public:
  TorusSdf(const Eigen::Vector3d& center, double major_radius,
           double minor_radius);
  SdfSample eval(const Eigen::Vector3d& x) const override;

 private:
  Eigen::Vector3d center_;
  double major_;
  double minor_;
};

/// Finite cylinder around the z-axis through `center` (flat caps).
class CappedCylinderSdf final : public Sdf {
 public:
  CappedCylinderSdf(const Eigen::Vector3d& center, double radius,
                    double half_height);
  SdfSample eval(const Eigen::Vector3d& x) const override;

 private:
  Eigen::Vector3d center_;
  double radius_;
  double half_height_;
};

/// Half-space boundary: value = dot(normal, x) - offset.
class PlaneSdf final : public Sdf {
 public:
  PlaneSdf(const Eigen::Vector3d& normal, double offset);
  SdfSample eval(const Eigen::Vector3d& x) const override;

 private:
  Eigen::Vector3d normal_;
  double offset_;
};

class RoundedBoxSdf final : public Sdf {
 public:
  RoundedBoxSdf(const Eigen::Vector3d& center,
                const Eigen::Vector3d& half_extents, double corner_radius);
  SdfSample eval(const Eigen::Vector3d& x) const override;

 private:
  Eigen::Vector3d center_;
  Eigen::Vector3d half_extents_;
  double corner_;
};

/// Regular-grid SDF with trilinear interpolation of values and of
/// precomputed central-difference gradients. Out-of-bounds queries are
/// clamped onto the grid and flagged.
class GridSdf final : public Sdf {
 public:
  /// Builds from an explicit value grid. values is row-major with x the
  /// slowest index: values[(ix * res_y + iy) * res_z + iz].
  GridSdf(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi,
          const Eigen::Vector3i& resolution, std::vector<double> values);

  /// Builds from a point cloud: normals from 20-neighbor PCA oriented
  /// outward from the centroid, distances signed by projection onto the
  /// local normal.
  static GridSdf from_cloud(const Eigen::MatrixX3d& points, int resolution,
                            int normal_neighbors = 20);

  SdfSample eval(const Eigen::Vector3d& x) const override;

  const Eigen::Vector3d& lower() const { return lo_; }
  const Eigen::Vector3d& upper() const { return hi_; }
  const Eigen::Vector3i& resolution() const { return res_; }
  const std::vector<double>& values() const { return values_; }
  /// Largest cell edge (accuracy scale for approximation guarantees).
  double cell_size() const { return cell_.maxCoeff(); }

  /// Binary cache round-trip (little-endian, documented in README).
  void save(const std::string& path) const;
  static GridSdf load(const std::string& path);

 private:
  double at(int ix, int iy, int iz) const {
    return values_[(static_cast<std::size_t>(ix) * res_.y() + iy) * res_.z() +
                   iz];
  }
  void build_gradients();

  Eigen::Vector3d lo_, hi_, cell_;
  Eigen::Vector3i res_;
  std::vector<double> values_;
  std::vector<double> grad_[3];
};

/// Per-point outward normals from local PCA (smallest covariance axis),
/// oriented away from the cloud centroid.
Eigen::MatrixX3d estimate_normals(const Eigen::MatrixX3d& points,
                                  int neighbors);

}  // namespace ergocover
