#pragma once

#include "mpereg/force_field.hpp"
#include "mpereg/geometry.hpp"

#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

namespace mpereg {

/// Which force decomposition drives the solver (see ForceState).
enum class ForceDrive {
  kRigidBody,   ///< net force + lever-arm torque
  kUnitRadial,  ///< radial sum + unit-direction torque
};

struct MpeConfig {
  double initial_rot_step = 0.2;     ///< radians
  double initial_trans_step = 0.1;   ///< normalized length
  double rot_threshold = 1e-3;       ///< radians
  double trans_threshold = 1e-3;     ///< normalized length
  int max_iterations = 5000;
  ForceParams force{};
  ForceDrive drive = ForceDrive::kRigidBody;
  /// Template-frame point carried with the template and used as the rotation
  /// center; the current template centroid when unset.
  std::optional<Point3> fixed_center;

  void validate() const;
};

enum class MpeStatus { kConverged, kForcesVanished, kMaxIterations };

std::string_view to_string(MpeStatus status);

struct MpeIteration {
  int iteration = 0;
  double rot_step = 0.0;    ///< step in effect for this iteration (after any halving)
  double trans_step = 0.0;
  double rot_flag = 0.0;    ///< T . T_prev
  double trans_flag = 0.0;  ///< S . S_prev
  RigidTransform pose;      ///< accumulated pose after this iteration's update
  double p2_energy = 0.0;   ///< evaluated at the pose entering this iteration
};

struct MpeTrace {
  std::vector<MpeIteration> iterations;
  MpeStatus status = MpeStatus::kMaxIterations;

  /// CSV: iteration,s_R,s_t,F_R,F_t,p2_energy,qw,qx,qy,qz,tx,ty,tz
  void write_csv(std::ostream& out) const;
};

struct MpeResult {
  RigidTransform pose;
  MpeTrace trace;
};

/// Coarse alignment by stepping the template about the torque axis and along
/// the gravitational vector, halving each step when its flag turns negative.
/// Expects normalized clouds. Returns the pose mapping the template onto the
/// reference; running out of iterations is reported in the trace status.
MpeResult mpe_align(const PointCloud& template_cloud, const PointCloud& reference, const MpeConfig& config);

}  // namespace mpereg
