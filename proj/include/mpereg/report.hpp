#pragma once

#include "mpereg/geometry.hpp"
#include "mpereg/harness.hpp"
#include "mpereg/pipeline.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>

namespace mpereg {

using Json = nlohmann::ordered_json;

/// {"quaternion_wxyz": [w, x, y, z], "translation_xyz": [x, y, z]}
Json pose_to_json(const RigidTransform& pose);
/// Throws InvalidArgument on a missing or malformed field.
RigidTransform pose_from_json(const Json& j);

RigidTransform read_pose(const std::filesystem::path& path);
void write_json(const Json& j, const std::filesystem::path& path);

struct GroundTruthErrors {
  double rotation_error_deg = 0.0;
  double translation_error = 0.0;
};

/// Timing fields are left out when `with_timings` is false so seeded runs
/// produce byte-identical files.
Json registration_report_to_json(const RegistrationReport& report, bool with_timings = true,
                                 const GroundTruthErrors* errors = nullptr);

/// One row per trial, fixed column order (see docs/formats.md).
void write_trials_csv(std::ostream& out, const ExperimentReport& report, bool with_timings = true);

Json experiment_summary_to_json(const ExperimentReport& report, bool with_timings = true);

Json p2_toy_to_json(const P2ToyRecord& record);

}  // namespace mpereg
