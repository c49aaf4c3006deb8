#pragma once

#include "mpereg/geometry.hpp"
#include "mpereg/icp.hpp"
#include "mpereg/mpe_solver.hpp"

#include <cstdint>
#include <optional>
#include <variant>

namespace mpereg {

/// Fixed number of points kept per cloud for the coarse stage.
struct SampleCount {
  std::size_t value = 200;
};

/// Fraction of each cloud kept for the coarse stage, in (0, 1].
struct SampleRatio {
  double value = 1.0;
};

using Sampling = std::variant<SampleCount, SampleRatio>;

struct MplConfig {
  Sampling sampling = SampleCount{200};
  std::uint64_t rng_seed = 0;
  MpeConfig mpe{};
  IcpConfig icp{};

  void validate() const;
};

/// Points kept from a cloud of `n` under `sampling`; throws when fewer than 4.
std::size_t resolve_sample_size(const Sampling& sampling, std::size_t n);

/// Uniform sample of k points without replacement, kept in original order.
/// Deterministic for a given seed. Throws InvalidArgument unless 1 <= k <= |cloud|.
PointCloud random_downsample(const PointCloud& cloud, std::size_t k, std::uint64_t seed);

/// Independent stream seed derived from a parent seed and a stream index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct StageTimings {
  double downsample_ms = 0.0;
  double coarse_ms = 0.0;  ///< MPE only
  double fine_ms = 0.0;    ///< ICP only
  double total_ms = 0.0;
};

struct RegistrationReport {
  RigidTransform pose;  ///< original units

  NormalizationRecord normalization;
  RigidTransform coarse_pose_normalized;  ///< MPE output
  RigidTransform fine_pose_normalized;    ///< ICP output (includes the coarse pose)

  std::size_t template_sample_size = 0;
  std::size_t reference_sample_size = 0;
  MpeStatus mpe_status = MpeStatus::kMaxIterations;
  int mpe_iterations = 0;
  double mpe_final_rot_step = 0.0;
  double mpe_final_trans_step = 0.0;
  double mpe_final_p2_energy = 0.0;
  int icp_iterations = 0;
  double icp_trimmed_mse = 0.0;  ///< normalized units

  StageTimings timings;
};

/// Normalize, downsample both clouds, MPE on the samples, trimmed ICP on the
/// full normalized clouds, then map the pose back to original units.
/// Stage failures are rethrown with the stage name prefixed.
RegistrationReport mpl_register(const PointCloud& template_cloud, const PointCloud& reference,
                                const MplConfig& config);

}  // namespace mpereg
