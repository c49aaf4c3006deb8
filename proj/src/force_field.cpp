#include "mpereg/force_field.hpp"

#include "mpereg/error.hpp"

#include <cmath>

namespace mpereg {

namespace {
constexpr double kCoincident = 1e-12;
}

void ForceParams::validate() const {
  if (!(softening > 0.0) || !std::isfinite(softening)) throw InvalidArgument("softening must be > 0");
  if (!(strength > 0.0) || !std::isfinite(strength)) throw InvalidArgument("strength must be > 0");
}

Vector3 point_force(const Point3& x, const PointCloud& reference, const ForceParams& params) {
  const double eps2 = params.softening * params.softening;
  Vector3 force = Vector3::Zero();
  const auto pts = reference.points();
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const Vector3 d = pts[j] - x;
    const double r2 = d.squaredNorm();
    const double r = std::sqrt(r2);
    if (r < kCoincident) continue;
    force += (reference.weight(j) * params.strength / ((r2 + eps2) * r)) * d;
  }
  return force;
}

double p2_residual(double pair_distance_sq, const ForceParams& params) {
  return -params.strength / (pair_distance_sq + params.softening * params.softening);
}

double p2_energy(const PointCloud& template_cloud, const NnIndex& reference_index, const ForceParams& params) {
  double e = 0.0;
  for (const auto& x : template_cloud.points()) e += p2_residual(reference_index.nearest(x).squared_distance, params);
  return e;
}

double potential_energy(const PointCloud& template_cloud, const PointCloud& reference, const ForceParams& params) {
  const double eps2 = params.softening * params.softening;
  double e = 0.0;
  for (std::size_t i = 0; i < template_cloud.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < reference.size(); ++j) {
      row += reference.weight(j) / ((reference[j] - template_cloud[i]).squaredNorm() + eps2);
    }
    e -= template_cloud.weight(i) * params.strength * row;
  }
  return e;
}

ForceState system_state(const PointCloud& template_cloud, const PointCloud& reference,
                        const NnIndex& reference_index, const Point3& center, const ForceParams& params) {
  params.validate();
  ForceState state;
  state.per_point_forces.reserve(template_cloud.size());

  const double eps2 = params.softening * params.softening;
  bool any_lever = false;
  for (std::size_t i = 0; i < template_cloud.size(); ++i) {
    const Point3& x = template_cloud[i];
    // Force and potential share one pass over the reference.
    Vector3 force = Vector3::Zero();
    double row = 0.0;
    for (std::size_t j = 0; j < reference.size(); ++j) {
      const Vector3 d = reference[j] - x;
      const double r2 = d.squaredNorm();
      const double inv = reference.weight(j) / (r2 + eps2);
      row += inv;
      const double r = std::sqrt(r2);
      if (r >= kCoincident) force += (reference.weight(j) * params.strength / ((r2 + eps2) * r)) * d;
    }
    state.potential_energy -= template_cloud.weight(i) * params.strength * row;
    state.per_point_forces.push_back(force);
    state.gravitational_vector += force;
    state.force_scale += force.norm();

    const Vector3 lever = x - center;
    const double arm = lever.norm();
    if (arm < kCoincident) continue;
    any_lever = true;
    const Vector3 v = lever / arm;
    const Vector3 radial = force.dot(v) * v;
    const Vector3 tangential = force - radial;
    state.radial_vector += radial;
    state.unit_torque += v.cross(tangential);
    state.torque += lever.cross(tangential);
    state.torque_scale += arm * force.norm();
  }
  if (!any_lever) throw DegenerateError("degenerate center: every template point coincides with it");

  state.p2_energy = p2_energy(template_cloud, reference_index, params);
  return state;
}

ForceState system_state(const PointCloud& template_cloud, const PointCloud& reference,
                        const Point3& center, const ForceParams& params) {
  return system_state(template_cloud, reference, NnIndex(reference), center, params);
}

}  // namespace mpereg
