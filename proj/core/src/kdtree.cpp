#include "ergocover/kdtree.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

namespace ergocover {

namespace {
constexpr int kLeafSize = 16;
}

KdTree::KdTree(const Eigen::MatrixX3d& points) : points_(points) {
  if (points_.rows() == 0) throw Error("KdTree: empty point set");
  order_.resize(points_.rows());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * points_.rows() / kLeafSize + 8);
  root_ = build(0, static_cast<int>(points_.rows()), 0);
}

int KdTree::build(int begin, int end, int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{});
  if (end - begin <= kLeafSize) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }
  // Split along the widest extent of the range.
  Eigen::Vector3d lo = points_.row(order_[begin]);
  Eigen::Vector3d hi = lo;
  for (int i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_.row(order_[i]).transpose());
    hi = hi.cwiseMax(points_.row(order_[i]).transpose());
  }
  int axis;
  (hi - lo).maxCoeff(&axis);
  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end, [&](int a, int b) {
                     const double pa = points_(a, axis), pb = points_(b, axis);
                     return pa != pb ? pa < pb : a < b;
                   });
  const double split = points_(order_[mid], axis);
  const int left = build(begin, mid, depth + 1);
  const int right = build(mid, end, depth + 1);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::vector<Neighbor> KdTree::knn(const Eigen::Vector3d& query, int k) const {
  k = std::min<int>(k, size());
  if (k <= 0) return {};

  // Max-heap of the current k best; top() is the worst kept candidate.
  std::priority_queue<Neighbor> heap;

  auto consider = [&](int idx) {
    const Neighbor cand{idx, (points_.row(idx).transpose() - query).squaredNorm()};
    if (static_cast<int>(heap.size()) < k) {
      heap.push(cand);
    } else if (cand < heap.top()) {
      heap.pop();
      heap.push(cand);
    }
  };

  // Recursive descent, nearer child first. Pruning uses a strict compare so
  // equal-distance candidates (which may win on index) are still visited.
  auto visit = [&](auto&& self, int node_id) -> void {
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) consider(order_[i]);
      return;
    }
    const double delta = query(node.axis) - node.split;
    const int near_child = delta <= 0.0 ? node.left : node.right;
    const int far_child = delta <= 0.0 ? node.right : node.left;
    self(self, near_child);
    if (static_cast<int>(heap.size()) < k || delta * delta <= heap.top().sq_dist)
      self(self, far_child);
  };
  visit(visit, root_);

  std::vector<Neighbor> out(heap.size());
  for (int i = static_cast<int>(heap.size()) - 1; i >= 0; --i) {
    out[i] = heap.top();
    heap.pop();
  }
  return out;
}

std::vector<Neighbor> KdTree::radius(const Eigen::Vector3d& query,
                                     double r) const {
  std::vector<Neighbor> out;
  const double r2 = r * r;
  auto visit = [&](auto&& self, int node_id) -> void {
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
      for (int i = node.begin; i < node.end; ++i) {
        const int idx = order_[i];
        const double d2 = (points_.row(idx).transpose() - query).squaredNorm();
        if (d2 <= r2) out.push_back(Neighbor{idx, d2});
      }
      return;
    }
    const double delta = query(node.axis) - node.split;
    const int near_child = delta <= 0.0 ? node.left : node.right;
    const int far_child = delta <= 0.0 ? node.right : node.left;
    self(self, near_child);
    if (delta * delta <= r2) self(self, far_child);
  };
  visit(visit, root_);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace ergocover
