#include "mpereg/geometry.hpp"

#include "mpereg/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mpereg {

namespace {

void check_points(const std::vector<Point3>& points) {
  if (points.empty()) throw InvalidArgument("point cloud must not be empty");
  for (const auto& p : points) {
    if (!p.allFinite()) throw InvalidArgument("point cloud contains a non-finite coordinate");
  }
}

Eigen::Quaterniond project_to_so3(const Matrix3& m) {
  Eigen::JacobiSVD<Matrix3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3 d = Matrix3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  Matrix3 r = svd.matrixU() * d * svd.matrixV().transpose();
  return Eigen::Quaterniond(r).normalized();
}

// Canonical sign (w >= 0) keeps serialized quaternions stable.
Eigen::Quaterniond canonical(Eigen::Quaterniond q) {
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

}  // namespace

PointCloud::PointCloud(std::vector<Point3> points) : points_(std::move(points)) {
  check_points(points_);
}

PointCloud::PointCloud(std::vector<Point3> points, std::vector<double> weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  check_points(points_);
  if (weights_.empty()) return;
  if (weights_.size() != points_.size()) {
    throw InvalidArgument("weight count does not match point count");
  }
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("weights must be positive and finite");
  }
}

PointCloud PointCloud::select(std::span<const std::size_t> indices) const {
  std::vector<Point3> pts;
  pts.reserve(indices.size());
  std::vector<double> w;
  if (has_weights()) w.reserve(indices.size());
  for (std::size_t i : indices) {
    pts.push_back(points_.at(i));
    if (has_weights()) w.push_back(weights_[i]);
  }
  return PointCloud(std::move(pts), std::move(w));
}

std::pair<Point3, Point3> PointCloud::bounds() const {
  Point3 lo = points_.front();
  Point3 hi = points_.front();
  for (const auto& p : points_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return {lo, hi};
}

RigidTransform::RigidTransform(const Eigen::Quaterniond& rotation, const Vector3& translation)
    : rotation_(canonical(rotation)), translation_(translation) {}

RigidTransform::RigidTransform(const Matrix3& rotation, const Vector3& translation)
    : rotation_(canonical(project_to_so3(rotation))), translation_(translation) {}

RigidTransform RigidTransform::from_axis_angle(const Vector3& axis, double angle,
                                               const Vector3& translation) {
  const double n = axis.norm();
  if (n == 0.0 || angle == 0.0) return {Eigen::Quaterniond::Identity(), translation};
  return {Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis / n)), translation};
}

RigidTransform RigidTransform::from_translation(const Vector3& translation) {
  return {Eigen::Quaterniond::Identity(), translation};
}

RigidTransform RigidTransform::inverse() const {
  const Eigen::Quaterniond inv = rotation_.conjugate();
  return {inv, -(inv * translation_)};
}

PointCloud NormalizationRecord::normalize(const PointCloud& cloud) const {
  std::vector<Point3> pts;
  pts.reserve(cloud.size());
  for (const auto& p : cloud.points()) pts.push_back(normalize(p));
  return PointCloud(std::move(pts), {cloud.weights().begin(), cloud.weights().end()});
}

PointCloud NormalizationRecord::denormalize(const PointCloud& cloud) const {
  std::vector<Point3> pts;
  pts.reserve(cloud.size());
  for (const auto& p : cloud.points()) pts.push_back(denormalize(p));
  return PointCloud(std::move(pts), {cloud.weights().begin(), cloud.weights().end()});
}

// x_n = (x - c)/d,  y_n = R x_n + t_n  =>  y = R x + (c - R c + d t_n).
RigidTransform NormalizationRecord::denormalize(const RigidTransform& pose) const {
  const auto& q = pose.quaternion();
  return {q, centroid - q * centroid + diagonal * pose.translation()};
}

RigidTransform NormalizationRecord::normalize(const RigidTransform& pose) const {
  const auto& q = pose.quaternion();
  return {q, (pose.translation() - centroid + q * centroid) / diagonal};
}

PointCloud apply_transform(const PointCloud& cloud, const RigidTransform& pose) {
  std::vector<Point3> pts;
  pts.reserve(cloud.size());
  const Matrix3 r = pose.rotation();
  for (const auto& p : cloud.points()) pts.push_back(r * p + pose.translation());
  return PointCloud(std::move(pts), {cloud.weights().begin(), cloud.weights().end()});
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {a.quaternion() * b.quaternion(), a.quaternion() * b.translation() + a.translation()};
}

Point3 centroid(const PointCloud& cloud) {
  Point3 sum = Point3::Zero();
  double mass = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    sum += cloud.weight(i) * cloud[i];
    mass += cloud.weight(i);
  }
  return sum / mass;
}

double rotation_error_deg(const RigidTransform& gt, const RigidTransform& est) {
  const Matrix3 rel = gt.rotation() * est.rotation().transpose();
  const Vector3 axial(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  return std::atan2(axial.norm() / 2.0, (rel.trace() - 1.0) / 2.0) * 180.0 / std::numbers::pi;
}

double translation_error(const Vector3& gt, const Vector3& est) { return (gt - est).norm(); }

NormalizedPair normalize_clouds(const PointCloud& template_cloud, const PointCloud& reference_cloud) {
  const auto [lo, hi] = reference_cloud.bounds();
  const double diag = (hi - lo).norm();
  if (!(diag > 0.0)) throw DegenerateError("degenerate cloud: reference points all coincide");
  NormalizationRecord rec{centroid(reference_cloud), diag};
  return {rec.normalize(template_cloud), rec.normalize(reference_cloud), rec};
}

}  // namespace mpereg
