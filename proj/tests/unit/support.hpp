#pragma once

#include "mpereg/geometry.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace testing {

using mpereg::Point3;
using mpereg::PointCloud;
using mpereg::RigidTransform;
using mpereg::Vector3;

using Rng = std::mt19937_64;

inline Vector3 random_unit(Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    Vector3 v(g(rng), g(rng), g(rng));
    if (v.norm() > 1e-6) return v.normalized();
  }
}

inline std::vector<Point3> random_points(Rng& rng, std::size_t n, double half_width = 1.0) {
  std::uniform_real_distribution<double> u(-half_width, half_width);
  std::vector<Point3> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  return pts;
}

inline PointCloud random_cloud(Rng& rng, std::size_t n, double half_width = 1.0) {
  return PointCloud(random_points(rng, n, half_width));
}

/// Points stretched unequally along the axes so no rotation maps the cloud onto itself.
inline PointCloud anisotropic_cloud(Rng& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<Point3> pts;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = u(rng);
    pts.emplace_back(x, 0.6 * u(rng) + 0.3 * x * x, 0.3 * u(rng) + 0.2 * x);
  }
  return PointCloud(std::move(pts));
}

inline RigidTransform random_pose(Rng& rng, double max_angle = std::numbers::pi, double max_translation = 1.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return RigidTransform::from_axis_angle(random_unit(rng), max_angle * u(rng),
                                         max_translation * u(rng) * random_unit(rng));
}

inline double max_abs_diff(const Vector3& a, const Vector3& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace testing
