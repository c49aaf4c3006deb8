#pragma once

#include "mpereg/geometry.hpp"

#include <cstdint>
#include <vector>

namespace mpereg {

/// Exact nearest-neighbour index over a fixed reference cloud (static kd-tree).
///
/// Results are identical to a brute-force scan: the returned point minimizes
/// the squared distance, and among equal distances the lowest reference
/// index wins. Immutable after construction; concurrent queries are safe.
class NnIndex {
 public:
  explicit NnIndex(const PointCloud& reference);

  /// Correspondence with template_index left at 0; callers fill it in.
  Correspondence nearest(const Point3& query) const;

  std::size_t size() const noexcept { return points_.size(); }

 private:
  struct Node {
    // Leaf when count > 0: indices_[begin, begin + count).
    std::uint32_t begin = 0;
    std::uint32_t count = 0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    int axis = 0;
    double split = 0.0;
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::uint32_t node, const Point3& q, double& best_d2, std::size_t& best_i) const;

  std::vector<Point3> points_;
  std::vector<std::uint32_t> indices_;
  std::vector<Node> nodes_;
};

inline NnIndex build(const PointCloud& reference) { return NnIndex(reference); }

}  // namespace mpereg
