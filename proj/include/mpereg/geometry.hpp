#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace mpereg {

using Point3 = Eigen::Vector3d;
using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

/// Ordered, non-empty set of finite 3D points with optional positive
/// per-point weights (particle masses). Missing weights read as 1.
class PointCloud {
 public:
  explicit PointCloud(std::vector<Point3> points);
  PointCloud(std::vector<Point3> points, std::vector<double> weights);

  std::size_t size() const noexcept { return points_.size(); }
  const Point3& operator[](std::size_t i) const { return points_[i]; }
  std::span<const Point3> points() const noexcept { return points_; }

  bool has_weights() const noexcept { return !weights_.empty(); }
  double weight(std::size_t i) const { return weights_.empty() ? 1.0 : weights_[i]; }
  std::span<const double> weights() const noexcept { return weights_; }

  /// Subset in the order given by `indices`; weights carried over.
  PointCloud select(std::span<const std::size_t> indices) const;

  /// Bounding-box corners (min, max).
  std::pair<Point3, Point3> bounds() const;

 private:
  std::vector<Point3> points_;
  std::vector<double> weights_;
};

/// Proper rigid motion x -> R x + t. The rotation is held as a unit
/// quaternion and renormalized on every construction path.
class RigidTransform {
 public:
  RigidTransform() = default;
  RigidTransform(const Eigen::Quaterniond& rotation, const Vector3& translation);
  /// Projects `rotation` onto SO(3) (nearest orthonormal matrix, det +1).
  RigidTransform(const Matrix3& rotation, const Vector3& translation);

  static RigidTransform identity() { return {}; }
  static RigidTransform from_axis_angle(const Vector3& axis, double angle,
                                        const Vector3& translation = Vector3::Zero());
  static RigidTransform from_translation(const Vector3& translation);

  const Eigen::Quaterniond& quaternion() const noexcept { return rotation_; }
  Matrix3 rotation() const { return rotation_.toRotationMatrix(); }
  const Vector3& translation() const noexcept { return translation_; }

  Point3 apply(const Point3& p) const { return rotation_ * p + translation_; }
  RigidTransform inverse() const;

 private:
  Eigen::Quaterniond rotation_ = Eigen::Quaterniond::Identity();
  Vector3 translation_ = Vector3::Zero();
};

struct Correspondence {
  std::size_t template_index = 0;
  std::size_t reference_index = 0;
  double squared_distance = 0.0;
};

/// Shift and scale that maps original coordinates into the unit frame:
/// p_normalized = (p - centroid) / diagonal.
struct NormalizationRecord {
  Point3 centroid = Point3::Zero();
  double diagonal = 1.0;

  Point3 normalize(const Point3& p) const { return (p - centroid) / diagonal; }
  Point3 denormalize(const Point3& p) const { return p * diagonal + centroid; }
  PointCloud normalize(const PointCloud& cloud) const;
  PointCloud denormalize(const PointCloud& cloud) const;
  /// Pose acting on normalized coordinates -> equivalent pose in original units.
  RigidTransform denormalize(const RigidTransform& pose) const;
  RigidTransform normalize(const RigidTransform& pose) const;
};

struct NormalizedPair {
  PointCloud template_cloud;
  PointCloud reference_cloud;
  NormalizationRecord record;
};

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& pose);

/// compose(a, b) applies b first, then a.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

/// Weighted mean of the points.
Point3 centroid(const PointCloud& cloud);

/// Geodesic angle between two rotations, in degrees, within [0, 180].
double rotation_error_deg(const RigidTransform& gt, const RigidTransform& est);

double translation_error(const Vector3& gt, const Vector3& est);

/// Centers both clouds on the reference centroid and scales them so the
/// reference bounding-box diagonal is 1. Throws DegenerateError when the
/// reference points all coincide.
NormalizedPair normalize_clouds(const PointCloud& template_cloud, const PointCloud& reference_cloud);

}  // namespace mpereg
