#pragma once

#include <vector>

#include <Eigen/Core>

#include "ergocover/util.hpp"

namespace ergocover {

/// A neighbor hit. Ordering is by (squared distance, index), which makes
/// k-NN results total-ordered and therefore identical to a brute-force
/// scan even in the presence of exact distance ties.
struct Neighbor {
  int index;
  double sq_dist;

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.sq_dist != b.sq_dist ? a.sq_dist < b.sq_dist : a.index < b.index;
  }
};

/// Static median-split KD-tree over 3D points. Queries are const and
/// thread-safe; the tree never changes after construction.
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(const Eigen::MatrixX3d& points);

  /// k nearest neighbors sorted ascending by (squared distance, index).
  /// k is clamped to the point count.
  std::vector<Neighbor> knn(const Eigen::Vector3d& query, int k) const;

  /// All points within radius (inclusive), sorted like knn.
  std::vector<Neighbor> radius(const Eigen::Vector3d& query, double r) const;

  int size() const { return static_cast<int>(points_.rows()); }
  const Eigen::MatrixX3d& points() const { return points_; }

 private:
  struct Node {
    int left = -1;
    int right = -1;
    int begin = 0;   // leaf range into order_
    int end = 0;
    int axis = -1;   // -1 marks a leaf
    double split = 0.0;
  };

  int build(int begin, int end, int depth);

  Eigen::MatrixX3d points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace ergocover
