#include "mpereg/icp.hpp"

#include "mpereg/error.hpp"
#include "mpereg/spatial_index.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mpereg {

void IcpConfig::validate() const {
  if (max_iterations < 1) throw InvalidArgument("ICP max_iterations must be >= 1");
  if (!(mse_tolerance > 0.0)) throw InvalidArgument("ICP mse_tolerance must be > 0");
  if (!(trim_ratio > 0.0 && trim_ratio <= 1.0)) throw InvalidArgument("ICP trim_ratio must lie in (0, 1]");
}

std::size_t trimmed_count(std::size_t n, double trim_ratio) {
  // Guard against ratio * n landing a hair above an integer.
  const double raw = trim_ratio * static_cast<double>(n);
  auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
  return std::clamp<std::size_t>(k, 1, n);
}

RigidTransform best_rigid_fit(std::span<const PointPair> pairs) {
  if (pairs.size() < 3) throw DegenerateError("degenerate correspondence set: fewer than 3 pairs");

  Point3 ca = Point3::Zero();
  Point3 cb = Point3::Zero();
  for (const auto& [a, b] : pairs) {
    ca += a;
    cb += b;
  }
  ca /= static_cast<double>(pairs.size());
  cb /= static_cast<double>(pairs.size());

  Matrix3 h = Matrix3::Zero();
  for (const auto& [a, b] : pairs) h += (a - ca) * (b - cb).transpose();

  Eigen::JacobiSVD<Matrix3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  // Rank < 2 leaves a free rotation about the line through the points.
  if (!(s(0) > 0.0) || s(1) <= 1e-12 * s(0)) {
    throw DegenerateError("degenerate correspondence set: points are collinear or coincident");
  }

  const Matrix3& u = svd.matrixU();
  const Matrix3& v = svd.matrixV();
  Matrix3 d = Matrix3::Identity();
  if ((v * u.transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  const Matrix3 r = v * d * u.transpose();
  return RigidTransform(r, cb - r * ca);
}

IcpResult icp_align(const PointCloud& template_cloud, const PointCloud& reference,
                    const RigidTransform& initial, const IcpConfig& config) {
  config.validate();
  if (template_cloud.size() < 3) throw InvalidArgument("ICP needs at least 3 template points");

  const NnIndex index(reference);
  const std::size_t n = template_cloud.size();
  const std::size_t keep = trimmed_count(n, config.trim_ratio);

  IcpResult result;
  result.pose = initial;
  double prev_mse = std::numeric_limits<double>::infinity();

  std::vector<Correspondence> matches(n);
  std::vector<std::size_t> order(n);
  std::vector<PointPair> pairs;
  pairs.reserve(keep);

  // Matching steps: one more than the number of refits, so the reported MSE
  // always belongs to the returned pose.
  for (int it = 1;; ++it) {
    const Matrix3 r = result.pose.rotation();
    for (std::size_t i = 0; i < n; ++i) {
      matches[i] = index.nearest(r * template_cloud[i] + result.pose.translation());
      matches[i].template_index = i;
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (keep < n) {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return matches[a].squared_distance < matches[b].squared_distance;
      });
    }

    double sse = 0.0;
    pairs.clear();
    for (std::size_t k = 0; k < keep; ++k) {
      const auto& m = matches[order[k]];
      sse += m.squared_distance;
      pairs.emplace_back(template_cloud[m.template_index], reference[m.reference_index]);
    }
    const double mse = sse / static_cast<double>(keep);
    result.mse_trace.push_back(mse);
    result.final_trimmed_mse = mse;
    result.iterations = it;

    if (prev_mse - mse < config.mse_tolerance || it > config.max_iterations) break;
    prev_mse = mse;

    try {
      result.pose = best_rigid_fit(pairs);
    } catch (const DegenerateError& e) {
      throw DegenerateError(std::string("ICP iteration ") + std::to_string(it) + ": " + e.what());
    }
  }
  return result;
}

}  // namespace mpereg
