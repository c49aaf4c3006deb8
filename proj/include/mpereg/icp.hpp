#pragma once

#include "mpereg/geometry.hpp"

#include <span>
#include <utility>
#include <vector>

namespace mpereg {

struct IcpConfig {
  int max_iterations = 100;
  double mse_tolerance = 1e-9;
  /// Fraction of template points kept per iteration (the closest ones).
  /// 1 gives classic ICP.
  double trim_ratio = 0.7;

  void validate() const;
};

struct IcpResult {
  RigidTransform pose;
  double final_trimmed_mse = 0.0;
  int iterations = 0;
  /// Trimmed MSE measured at each matching step.
  std::vector<double> mse_trace;
};

using PointPair = std::pair<Point3, Point3>;

/// Least-squares rigid motion mapping each pair's first point onto its second
/// (centroid alignment + SVD of the cross-covariance, det forced to +1).
/// Throws DegenerateError for fewer than 3 pairs or a collinear configuration.
RigidTransform best_rigid_fit(std::span<const PointPair> pairs);

/// Number of pairs retained out of `n` for a trim ratio: ceil(ratio * n).
std::size_t trimmed_count(std::size_t n, double trim_ratio);

/// Trimmed ICP starting from `initial`; the returned pose includes it.
IcpResult icp_align(const PointCloud& template_cloud, const PointCloud& reference,
                    const RigidTransform& initial, const IcpConfig& config);

}  // namespace mpereg
