#include "mpereg/spatial_index.hpp"

#include <algorithm>
#include <limits>

namespace mpereg {

namespace {
constexpr std::uint32_t kLeafSize = 8;
}

NnIndex::NnIndex(const PointCloud& reference)
    : points_(reference.points().begin(), reference.points().end()) {
  indices_.resize(points_.size());
  for (std::uint32_t i = 0; i < indices_.size(); ++i) indices_[i] = i;
  nodes_.reserve(2 * points_.size() / kLeafSize + 1);
  build(0, static_cast<std::uint32_t>(points_.size()));
}

std::uint32_t NnIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  if (end - begin <= kLeafSize) {
    nodes_[id].begin = begin;
    nodes_[id].count = end - begin;
    return id;
  }

  Point3 lo = points_[indices_[begin]];
  Point3 hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[indices_[i]]);
    hi = hi.cwiseMax(points_[indices_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(indices_.begin() + begin, indices_.begin() + mid, indices_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
  const double split = points_[indices_[mid]][axis];

  // Left holds coordinates <= split, right holds >= split; the search below
  // only prunes on strict inequality so equal-distance ties are never lost.
  const std::uint32_t left = build(begin, mid);
  const std::uint32_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void NnIndex::search(std::uint32_t node_id, const Point3& q, double& best_d2,
                     std::size_t& best_i) const {
  const Node& node = nodes_[node_id];
  if (node.count > 0) {
    for (std::uint32_t k = node.begin; k < node.begin + node.count; ++k) {
      const std::uint32_t i = indices_[k];
      const double d2 = (points_[i] - q).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && i < best_i)) {
        best_d2 = d2;
        best_i = i;
      }
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::uint32_t near = diff <= 0.0 ? node.left : node.right;
  const std::uint32_t far = diff <= 0.0 ? node.right : node.left;
  search(near, q, best_d2, best_i);
  if (diff * diff <= best_d2) search(far, q, best_d2, best_i);
}

Correspondence NnIndex::nearest(const Point3& query) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  std::size_t best_i = std::numeric_limits<std::size_t>::max();
  search(0, query, best_d2, best_i);
  return {0, best_i, best_d2};
}

}  // namespace mpereg
