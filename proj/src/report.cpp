#include "mpereg/report.hpp"

#include "mpereg/error.hpp"
#include "mpereg/io.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <string>

namespace mpereg {

namespace {

Json vec_to_json(const Vector3& v) { return Json::array({v.x(), v.y(), v.z()}); }

Json stat_to_json(const Stat& s) { return {{"mean", s.mean}, {"variance", s.variance}}; }

// Infinity (failed trials) has no JSON spelling.
Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

Json pose_to_json(const RigidTransform& pose) {
  const auto& q = pose.quaternion();
  return {{"quaternion_wxyz", Json::array({q.w(), q.x(), q.y(), q.z()})},
          {"translation_xyz", vec_to_json(pose.translation())}};
}

RigidTransform pose_from_json(const Json& j) {
  try {
    const auto& q = j.at("quaternion_wxyz");
    const auto& t = j.at("translation_xyz");
    if (q.size() != 4 || t.size() != 3) throw InvalidArgument("pose arrays must have 4 and 3 entries");
    const Eigen::Quaterniond quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(), q[3].get<double>());
    if (!(quat.norm() > 0.0)) throw InvalidArgument("pose quaternion is zero");
    return {quat, Vector3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>())};
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed pose: ") + e.what());
  }
}

RigidTransform read_pose(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string(), e.what());
  }
  // A registration report nests the pose under "pose".
  return pose_from_json(j.contains("pose") ? j.at("pose") : j);
}

void write_json(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError(path.string(), "write failed");
}

Json registration_report_to_json(const RegistrationReport& r, bool with_timings, const GroundTruthErrors* errors) {
  Json j;
  j["pose"] = pose_to_json(r.pose);
  j["normalization"] = {{"centroid", vec_to_json(r.normalization.centroid)},
                        {"diagonal", r.normalization.diagonal}};
  j["coarse"] = {{"status", std::string(to_string(r.mpe_status))},
                 {"iterations", r.mpe_iterations},
                 {"template_sample_size", r.template_sample_size},
                 {"reference_sample_size", r.reference_sample_size},
                 {"final_rot_step", r.mpe_final_rot_step},
                 {"final_trans_step", r.mpe_final_trans_step},
                 {"final_p2_energy", r.mpe_final_p2_energy},
                 {"pose_normalized", pose_to_json(r.coarse_pose_normalized)}};
  j["fine"] = {{"iterations", r.icp_iterations},
               {"trimmed_mse_normalized", r.icp_trimmed_mse},
               {"trimmed_rmse", std::sqrt(r.icp_trimmed_mse) * r.normalization.diagonal},
               {"pose_normalized", pose_to_json(r.fine_pose_normalized)}};
  if (with_timings) {
    j["timings_ms"] = {{"downsample", r.timings.downsample_ms},
                       {"coarse", r.timings.coarse_ms},
                       {"fine", r.timings.fine_ms},
                       {"total", r.timings.total_ms}};
  }
  if (errors != nullptr) {
    j["ground_truth_errors"] = {{"rotation_error_deg", errors->rotation_error_deg},
                                {"translation_error", errors->translation_error}};
  }
  return j;
}

void write_trials_csv(std::ostream& out, const ExperimentReport& report, bool with_timings) {
  out << "trial_id,experiment,condition_index,condition_value,seed,rotation_max,translation_max,gaussian_sigma,"
         "outlier_count,rotation_error_deg,translation_error,rms_inlier_residual,precision,"
         "coarse_rotation_error_deg,coarse_translation_error,coarse_rms_inlier_residual,";
  if (with_timings) out << "downsample_ms,coarse_ms,fine_ms,total_ms,";
  out << "mpe_iterations,icp_iterations,converged,failure\n";
  for (const auto& r : report.rows) {
    out << r.trial_id << ',' << report.experiment << ',' << r.condition_index << ','
        << format_double(r.condition_value) << ',' << r.spec.seed << ',' << format_double(r.spec.rotation_max) << ','
        << format_double(r.spec.translation_max) << ',' << format_double(r.spec.gaussian_sigma) << ','
        << r.spec.outlier_count << ',' << format_double(r.rotation_error_deg) << ','
        << format_double(r.translation_error) << ',' << format_double(r.rms_inlier_residual) << ','
        << format_double(r.precision) << ',' << format_double(r.coarse_rotation_error_deg) << ','
        << format_double(r.coarse_translation_error) << ',' << format_double(r.coarse_rms_inlier_residual) << ',';
    if (with_timings) {
      out << format_double(r.timings.downsample_ms) << ',' << format_double(r.timings.coarse_ms) << ','
          << format_double(r.timings.fine_ms) << ',' << format_double(r.timings.total_ms) << ',';
    }
    std::string failure = r.failure;
    for (char& c : failure) {
      if (c == ',' || c == '\n' || c == '"') c = ' ';
    }
    out << r.mpe_iterations << ',' << r.icp_iterations << ',' << (r.converged ? 1 : 0) << ',' << failure << '\n';
  }
}

Json experiment_summary_to_json(const ExperimentReport& report, bool with_timings) {
  Json conditions = Json::array();
  for (const auto& s : report.summaries) {
    Json c = {{"condition_index", s.condition_index},
              {"value", s.condition_value},
              {"trials", s.trials},
              {"converged", s.converged},
              {"rotation_error_deg", stat_to_json(s.rotation_error_deg)},
              {"translation_error", stat_to_json(s.translation_error)},
              {"rms_inlier_residual", stat_to_json(s.rms_inlier_residual)},
              {"precision", stat_to_json(s.precision)},
              {"coarse_rms_inlier_residual", stat_to_json(s.coarse_rms_inlier_residual)}};
    if (with_timings) {
      c["coarse_ms"] = stat_to_json(s.coarse_ms);
      c["total_ms"] = stat_to_json(s.total_ms);
    }
    for (auto& [key, value] : c.items()) {
      if (value.is_object() && value.contains("mean")) {
        value["mean"] = number_or_null(value["mean"].get<double>());
        value["variance"] = number_or_null(value["variance"].get<double>());
      }
    }
    conditions.push_back(std::move(c));
  }
  return {{"experiment", report.experiment},
          {"condition", report.condition},
          {"rows", report.rows.size()},
          {"conditions", std::move(conditions)}};
}

Json p2_toy_to_json(const P2ToyRecord& r) {
  return {{"seed", r.seed},
          {"outlier_scale", r.outlier_scale},
          {"inlier_count", r.inlier_count},
          {"truth", pose_to_json(r.truth)},
          {"l2", {{"pose", pose_to_json(r.l2_pose)},
                  {"rotation_error_deg", r.l2_rotation_error_deg},
                  {"inlier_rms", r.l2_inlier_rms}}},
          {"p2", {{"pose", pose_to_json(r.p2_pose)},
                  {"rotation_error_deg", r.p2_rotation_error_deg},
                  {"inlier_rms", r.p2_inlier_rms}}},
          {"outlier_pair_distance", r.outlier_pair_distance},
          {"outlier_p2_residual", r.outlier_p2_residual}};
}

}  // namespace mpereg
