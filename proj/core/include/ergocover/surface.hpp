#pragma once

#include <memory>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "ergocover/kdtree.hpp"
#include "ergocover/spectral.hpp"
#include "ergocover/trajectory.hpp"

namespace ergocover {

/// Immutable scene geometry: point cloud, normalized region-of-interest
/// weights, and a KD-tree over the points. All queries are const.
struct PointCloudSurface {
  Eigen::MatrixX3d points;
  Eigen::VectorXd roi_weight;        ///< >= 0, sums to 1
  std::shared_ptr<const KdTree> kd;
  double median_nn_spacing = 0.0;    ///< median nearest-neighbor distance

  int size() const { return static_cast<int>(points.rows()); }

  /// Validates and normalizes weights (>= 0, positive total mass), builds
  /// the KD-tree, caches the median spacing.
  static PointCloudSurface create(Eigen::MatrixX3d points,
                                  Eigen::VectorXd raw_weights);
};

/// Symmetric normalized Laplacian L = I - D^{-1/2} W D^{-1/2} of the
/// symmetrized k-NN graph with Gaussian edge weights exp(-d^2 / (2 sigma^2)).
/// sigma_g <= 0 selects the median k-NN distance automatically.
/// Throws if the graph is disconnected (message names the component count).
Eigen::SparseMatrix<double> build_graph_laplacian(
    const PointCloudSurface& cloud, int k_graph, double sigma_g = 0.0);

/// Heat-diffused target distribution: spectral damping of the ROI weights
/// convexly mixed with the raw (sharp) weights,
///   phi = normalize(clip(beta * sum_i e^{-lambda_i tau} <F_i, w> F_i
///                        + (1 - beta) * w)).
Eigen::VectorXd diffuse(const PointCloudSurface& cloud,
                        const SpectralBasis& basis, double tau_d, double beta);

/// Basis coefficients of a node distribution: c = eigvecs^T phi.
Eigen::VectorXd target_coeffs(const Eigen::VectorXd& phi,
                              const SpectralBasis& basis);

/// Empirical visitation distribution of a trajectory: each position adds
/// Gaussian weight exp(-d^2 / (2 sigma_a^2)) to its K nearest cloud nodes;
/// the result is normalized to sum 1.
Eigen::VectorXd deposit_trajectory(const Trajectory& traj,
                                   const PointCloudSurface& cloud, int k,
                                   double sigma_a);

/// Same, for bare positions (internal building block; also used by the
/// deposit oracle tests).
Eigen::VectorXd deposit_positions(const Eigen::MatrixX3d& positions,
                                  const PointCloudSurface& cloud, int k,
                                  double sigma_a);

}  // namespace ergocover
