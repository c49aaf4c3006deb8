#include "mpereg/mpe_solver.hpp"

#include "mpereg/error.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace mpereg {

namespace {

// A field component "vanishes" once it is this small relative to the sum of
// the magnitudes it was accumulated from; pair cancellation leaves roundoff
// of roughly machine epsilon times that sum.
constexpr double kVanishing = 1e-10;

bool vanishes(const Vector3& v, double scale) { return v.norm() <= kVanishing * scale || v.norm() < 1e-300; }

}  // namespace

void MpeConfig::validate() const {
  force.validate();
  if (!(initial_rot_step > 0.0) || !(initial_trans_step > 0.0)) throw InvalidArgument("MPE steps must be > 0");
  if (!(rot_threshold > 0.0) || !(trans_threshold > 0.0)) throw InvalidArgument("MPE thresholds must be > 0");
  if (rot_threshold >= initial_rot_step || trans_threshold >= initial_trans_step) {
    throw InvalidArgument("MPE thresholds must be below the initial steps");
  }
  if (max_iterations < 1) throw InvalidArgument("MPE max_iterations must be >= 1");
}

std::string_view to_string(MpeStatus status) {
  switch (status) {
    case MpeStatus::kConverged: return "converged";
    case MpeStatus::kForcesVanished: return "forces-vanished";
    case MpeStatus::kMaxIterations: return "max-iterations";
  }
  return "unknown";
}

void MpeTrace::write_csv(std::ostream& out) const {
  out << "iteration,s_R,s_t,F_R,F_t,p2_energy,qw,qx,qy,qz,tx,ty,tz\n";
  out << std::setprecision(17);
  for (const auto& it : iterations) {
    const auto& q = it.pose.quaternion();
    const auto& t = it.pose.translation();
    out << it.iteration << ',' << it.rot_step << ',' << it.trans_step << ',' << it.rot_flag << ','
        << it.trans_flag << ',' << it.p2_energy << ',' << q.w() << ',' << q.x() << ',' << q.y() << ','
        << q.z() << ',' << t.x() << ',' << t.y() << ',' << t.z() << '\n';
  }
}

MpeResult mpe_align(const PointCloud& template_cloud, const PointCloud& reference, const MpeConfig& config) {
  config.validate();
  const NnIndex index(reference);

  MpeResult result;
  RigidTransform& pose = result.pose;
  auto& trace = result.trace;

  double rot_step = config.initial_rot_step;
  double trans_step = config.initial_trans_step;
  Vector3 prev_torque = Vector3::Zero();
  Vector3 prev_vector = Vector3::Zero();

  for (int k = 1; k <= config.max_iterations; ++k) {
    const PointCloud current = apply_transform(template_cloud, pose);
    const Point3 center = config.fixed_center ? pose.apply(*config.fixed_center) : centroid(current);
    const ForceState state = system_state(current, reference, index, center, config.force);

    const bool rigid = config.drive == ForceDrive::kRigidBody;
    const Vector3 torque = rigid ? state.torque : state.unit_torque;
    const Vector3 vector = rigid ? state.gravitational_vector : state.radial_vector;
    const double torque_scale = rigid ? state.torque_scale : state.force_scale;

    MpeIteration rec;
    rec.iteration = k;
    rec.rot_flag = torque.dot(prev_torque);
    rec.trans_flag = vector.dot(prev_vector);
    rec.p2_energy = state.p2_energy;
    if (rec.rot_flag < 0.0) rot_step /= 2.0;
    if (rec.trans_flag < 0.0) trans_step /= 2.0;
    rec.rot_step = rot_step;
    rec.trans_step = trans_step;
    prev_torque = torque;
    prev_vector = vector;

    const bool torque_gone = vanishes(torque, torque_scale);
    const bool vector_gone = vanishes(vector, state.force_scale);
    if (torque_gone && vector_gone) {
      rec.pose = pose;
      trace.iterations.push_back(rec);
      trace.status = MpeStatus::kForcesVanished;
      return result;
    }

    // Rotation about the torque axis through the center, then translation.
    RigidTransform step;
    if (!torque_gone) {
      const Eigen::Quaterniond q(Eigen::AngleAxisd(rot_step, torque.normalized()));
      step = RigidTransform(q, center - q * center);
    }
    if (!vector_gone) {
      step = compose(RigidTransform::from_translation(trans_step * vector.normalized()), step);
    }
    pose = compose(step, pose);

    rec.pose = pose;
    trace.iterations.push_back(rec);

    if (rot_step <= config.rot_threshold && trans_step <= config.trans_threshold) {
      trace.status = MpeStatus::kConverged;
      return result;
    }
  }
  trace.status = MpeStatus::kMaxIterations;
  return result;
}

}  // namespace mpereg
