#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

namespace tacmap {

// Simple 3-D kd-tree over an externally owned point vector. Build is median
// split; queries are exact. Deterministic for a given input order.
class KdTree3 {
 public:
  explicit KdTree3(const std::vector<Eigen::Vector3d>& points) : points_(points) {
    indices_.resize(points.size());
    std::iota(indices_.begin(), indices_.end(), 0);
    nodes_.reserve(points.size());
    if (!points.empty()) root_ = build(0, points.size());
  }

  std::size_t size() const { return points_.size(); }

  // Index of the nearest point and its squared distance; (npos, inf) if empty.
  std::pair<std::size_t, double> nearest(const Eigen::Vector3d& q) const {
    std::size_t best = npos;
    double best_d2 = std::numeric_limits<double>::infinity();
    if (root_ >= 0) search_nearest(root_, q, best, best_d2);
    return {best, best_d2};
  }

  // All point indices within radius of q (unsorted).
  std::vector<std::size_t> radius(const Eigen::Vector3d& q, double r) const {
    std::vector<std::size_t> out;
    if (root_ >= 0) search_radius(root_, q, r * r, out);
    return out;
  }

  // Indices of the k nearest points, sorted by increasing distance.
  std::vector<std::size_t> knn(const Eigen::Vector3d& q, std::size_t k) const {
    std::priority_queue<std::pair<double, std::size_t>> heap;  // max-heap on d2
    if (root_ >= 0 && k > 0) search_knn(root_, q, k, heap);
    std::vector<std::size_t> out(heap.size());
    for (std::size_t i = heap.size(); i-- > 0;) {
      out[i] = heap.top().second;
      heap.pop();
    }
    return out;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  struct Node {
    std::size_t index;
    int axis;
    int left = -1;
    int right = -1;
  };

  int build(std::size_t lo, std::size_t hi) {
    Eigen::Vector3d mn = points_[indices_[lo]], mx = mn;
    for (std::size_t i = lo + 1; i < hi; ++i) {
      mn = mn.cwiseMin(points_[indices_[i]]);
      mx = mx.cwiseMax(points_[indices_[i]]);
    }
    int axis = 0;
    Eigen::Vector3d extent = mx - mn;
    if (extent.y() > extent.x()) axis = 1;
    if (extent.z() > extent[axis]) axis = 2;

    std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(indices_.begin() + lo, indices_.begin() + mid, indices_.begin() + hi,
                     [&](std::size_t a, std::size_t b) {
                       if (points_[a][axis] != points_[b][axis])
                         return points_[a][axis] < points_[b][axis];
                       return a < b;  // stable tie-break keeps builds deterministic
                     });
    Node node;
    node.index = indices_[mid];
    node.axis = axis;
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (mid > lo) nodes_[id].left = build(lo, mid);
    if (mid + 1 < hi) nodes_[id].right = build(mid + 1, hi);
    return id;
  }

  void search_nearest(int id, const Eigen::Vector3d& q, std::size_t& best,
                      double& best_d2) const {
    const Node& n = nodes_[id];
    const Eigen::Vector3d& p = points_[n.index];
    double d2 = (p - q).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = n.index;
    }
    double delta = q[n.axis] - p[n.axis];
    int first = delta < 0.0 ? n.left : n.right;
    int second = delta < 0.0 ? n.right : n.left;
    if (first >= 0) search_nearest(first, q, best, best_d2);
    if (second >= 0 && delta * delta < best_d2) search_nearest(second, q, best, best_d2);
  }

  void search_radius(int id, const Eigen::Vector3d& q, double r2,
                     std::vector<std::size_t>& out) const {
    const Node& n = nodes_[id];
    const Eigen::Vector3d& p = points_[n.index];
    if ((p - q).squaredNorm() <= r2) out.push_back(n.index);
    double delta = q[n.axis] - p[n.axis];
    int first = delta < 0.0 ? n.left : n.right;
    int second = delta < 0.0 ? n.right : n.left;
    if (first >= 0) search_radius(first, q, r2, out);
    if (second >= 0 && delta * delta <= r2) search_radius(second, q, r2, out);
  }

  void search_knn(int id, const Eigen::Vector3d& q, std::size_t k,
                  std::priority_queue<std::pair<double, std::size_t>>& heap) const {
    const Node& n = nodes_[id];
    const Eigen::Vector3d& p = points_[n.index];
    double d2 = (p - q).squaredNorm();
    if (heap.size() < k) {
      heap.emplace(d2, n.index);
    } else if (d2 < heap.top().first) {
      heap.pop();
      heap.emplace(d2, n.index);
    }
    double delta = q[n.axis] - p[n.axis];
    int first = delta < 0.0 ? n.left : n.right;
    int second = delta < 0.0 ? n.right : n.left;
    if (first >= 0) search_knn(first, q, k, heap);
    if (second >= 0 && (heap.size() < k || delta * delta < heap.top().first)) {
      search_knn(second, q, k, heap);
    }
  }

  const std::vector<Eigen::Vector3d>& points_;
  std::vector<std::size_t> indices_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace tacmap
