#include "ergocover/surface.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace ergocover {

PointCloudSurface PointCloudSurface::create(Eigen::MatrixX3d points,
                                            Eigen::VectorXd raw_weights) {
  const int n = static_cast<int>(points.rows());
  if (n < 2) throw Error("PointCloudSurface: need at least 2 points");
  if (raw_weights.size() != n)
    throw Error("PointCloudSurface: weight count does not match point count");
  if (!points.allFinite() || !raw_weights.allFinite())
    throw Error("PointCloudSurface: non-finite input");
  if ((raw_weights.array() < 0.0).any())
    throw Error("PointCloudSurface: negative ROI weight");
  const double total = raw_weights.sum();
  if (total <= 0.0)
    throw Error("PointCloudSurface: ROI weights carry no mass");

  PointCloudSurface surf;
  surf.points = std::move(points);
  surf.roi_weight = raw_weights / total;
  surf.kd = std::make_shared<KdTree>(surf.points);

  std::vector<double> nn(n);
  for (int i = 0; i < n; ++i) {
    const auto hits = surf.kd->knn(surf.points.row(i), 2);
    nn[i] = std::sqrt(hits.back().sq_dist);  // hits[0] is the point itself
  }
  std::nth_element(nn.begin(), nn.begin() + n / 2, nn.end());
  surf.median_nn_spacing = nn[n / 2];
  return surf;
}

Eigen::SparseMatrix<double> build_graph_laplacian(
    const PointCloudSurface& cloud, int k_graph, double sigma_g) {
  const int n = cloud.size();
  if (k_graph < 1 || k_graph >= n)
    throw Error("build_graph_laplacian: need 1 <= k_graph < N");

  // Directed k-NN edges, deduplicated into an undirected edge list.
  struct Edge {
    int a, b;
    double sq_dist;
  };
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(n) * k_graph);
  for (int i = 0; i < n; ++i) {
    const auto hits = cloud.kd->knn(cloud.points.row(i), k_graph + 1);
    for (const auto& h : hits) {
      if (h.index == i) continue;
      edges.push_back(Edge{std::min(i, h.index), std::max(i, h.index),
                           h.sq_dist});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    return x.a != y.a ? x.a < y.a : x.b < y.b;
  });
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](const Edge& x, const Edge& y) {
                            return x.a == y.a && x.b == y.b;
                          }),
              edges.end());

  // Connectivity via union-find; report the component count on failure.
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (const auto& e : edges) parent[find(e.a)] = find(e.b);
  int components = 0;
  for (int i = 0; i < n; ++i)
    if (find(i) == i) ++components;
  if (components != 1)
    throw Error("build_graph_laplacian: k-NN graph is disconnected (" +
                std::to_string(components) + " components); increase k_graph");

  if (sigma_g <= 0.0) {
    // Median k-NN distance over all directed edges.
    std::vector<double> d;
    d.reserve(edges.size());
    for (const auto& e : edges) d.push_back(std::sqrt(e.sq_dist));
    std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
    sigma_g = d[d.size() / 2];
    if (sigma_g <= 0.0)
      throw Error("build_graph_laplacian: degenerate cloud (zero spacing)");
  }

  Eigen::VectorXd degree = Eigen::VectorXd::Zero(n);
  std::vector<double> weight(edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k) {
    weight[k] = std::exp(-edges[k].sq_dist / (2.0 * sigma_g * sigma_g));
    degree(edges[k].a) += weight[k];
    degree(edges[k].b) += weight[k];
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * edges.size() + n);
  for (int i = 0; i < n; ++i) triplets.emplace_back(i, i, 1.0);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto& e = edges[k];
    const double v = -weight[k] / std::sqrt(degree(e.a) * degree(e.b));
    triplets.emplace_back(e.a, e.b, v);
    triplets.emplace_back(e.b, e.a, v);
  }
  Eigen::SparseMatrix<double> laplacian(n, n);
  laplacian.setFromTriplets(triplets.begin(), triplets.end());
  laplacian.makeCompressed();
  return laplacian;
}

Eigen::VectorXd diffuse(const PointCloudSurface& cloud,
                        const SpectralBasis& basis, double tau_d,
                        double beta) {
  if (tau_d < 0.0) throw Error("diffuse: tau_d must be >= 0");
  if (beta < 0.0 || beta > 1.0) throw Error("diffuse: beta must be in [0,1]");
  const Eigen::VectorXd& w = cloud.roi_weight;
  const Eigen::VectorXd coeffs = basis.eigvecs.transpose() * w;
  const Eigen::VectorXd damped =
      (-tau_d * basis.eigvals.array()).exp() * coeffs.array();
  Eigen::VectorXd phi = beta * (basis.eigvecs * damped) + (1.0 - beta) * w;
  phi = phi.cwiseMax(0.0);
  const double total = phi.sum();
  if (total <= 1e-15)
    throw Error("diffuse: diffused distribution has no mass");
  return phi / total;
}

Eigen::VectorXd target_coeffs(const Eigen::VectorXd& phi,
                              const SpectralBasis& basis) {
  if (phi.size() != basis.eigvecs.rows())
    throw Error("target_coeffs: distribution size does not match basis");
  return basis.eigvecs.transpose() * phi;
}

Eigen::VectorXd deposit_positions(const Eigen::MatrixX3d& positions,
                                  const PointCloudSurface& cloud, int k,
                                  double sigma_a) {
  if (k < 1 || k > cloud.size())
    throw Error("deposit: need 1 <= K <= N");
  if (sigma_a <= 0.0) throw Error("deposit: sigma_a must be positive");
  Eigen::VectorXd u = Eigen::VectorXd::Zero(cloud.size());
  const double inv = 1.0 / (2.0 * sigma_a * sigma_a);
  for (int t = 0; t < positions.rows(); ++t) {
    const auto hits = cloud.kd->knn(positions.row(t), k);
    for (const auto& h : hits) u(h.index) += std::exp(-h.sq_dist * inv);
  }
  const double total = u.sum();
  if (total <= 0.0)
    throw Error("deposit: zero total mass (sigma_a too small?)");
  return u / total;
}

Eigen::VectorXd deposit_trajectory(const Trajectory& traj,
                                   const PointCloudSurface& cloud, int k,
                                   double sigma_a) {
  return deposit_positions(traj.positions(), cloud, k, sigma_a);
}

}  // namespace ergocover
