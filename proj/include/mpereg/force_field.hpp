#pragma once

#include "mpereg/geometry.hpp"
#include "mpereg/spatial_index.hpp"

#include <vector>

namespace mpereg {

/// Softened inverse-square field parameters, in normalized units.
struct ForceParams {
  double softening = 0.01;  ///< epsilon; bounds every pair term by strength / softening^2
  double strength = 1.0;    ///< K; per-point masses come from PointCloud weights

  void validate() const;
};

/// Net field quantities for one template pose.
///
/// Two decompositions of the per-point forces are kept side by side:
///  - rigid-body: `gravitational_vector` is the net force and `torque` uses
///    the lever arm r_i = x_i - center. Both vanish exactly for identical
///    aligned clouds because pair contributions cancel.
///  - unit-radial: `radial_vector` sums the radial components (F.v)v with
///    unit directions v_i, and `unit_torque` crosses v_i with the
///    tangential remainder.
struct ForceState {
  std::vector<Vector3> per_point_forces;
  Vector3 gravitational_vector = Vector3::Zero();
  Vector3 torque = Vector3::Zero();
  Vector3 radial_vector = Vector3::Zero();
  Vector3 unit_torque = Vector3::Zero();
  double potential_energy = 0.0;
  double p2_energy = 0.0;
  /// Sum of |r_i| |F_i| and |F_i|; the scale against which "vanishing" is judged.
  double torque_scale = 0.0;
  double force_scale = 0.0;
};

/// Attractive softened force on one template point:
/// sum_j w_j K / (|y_j - x|^2 + eps^2) * unit(y_j - x). Coincident pairs add nothing.
Vector3 point_force(const Point3& template_point, const PointCloud& reference, const ForceParams& params);

/// -K / (d^2 + eps^2), the bounded per-pair residual.
double p2_residual(double pair_distance_sq, const ForceParams& params);

/// -sum_i K / (|y_j*(i) - x_i|^2 + eps^2) over nearest-neighbour pairs.
double p2_energy(const PointCloud& template_cloud, const NnIndex& reference_index, const ForceParams& params);

/// Softened all-pairs energy: -sum_ij w_i w_j K / (|y_j - x_i|^2 + eps^2).
double potential_energy(const PointCloud& template_cloud, const PointCloud& reference, const ForceParams& params);

/// Throws DegenerateError("degenerate center") if every template point sits on `center`.
ForceState system_state(const PointCloud& template_cloud, const PointCloud& reference,
                        const NnIndex& reference_index, const Point3& center, const ForceParams& params);

ForceState system_state(const PointCloud& template_cloud, const PointCloud& reference,
                        const Point3& center, const ForceParams& params);

}  // namespace mpereg
