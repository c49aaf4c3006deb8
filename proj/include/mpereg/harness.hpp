#pragma once

#include "mpereg/geometry.hpp"
#include "mpereg/pipeline.hpp"

#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

namespace mpereg {

/// Random rigid motion plus corruption applied to a cloud. All lengths are
/// in normalized units (reference bounding-box diagonal = 1).
struct PerturbationSpec {
  double rotation_max = std::numbers::pi / 2;  ///< angle drawn uniformly from [0, rotation_max]
  double translation_max = 0.3;                ///< uniform direction, length uniform in [0, translation_max]
  double gaussian_sigma = 0.0;                 ///< per-axis standard deviation of the point jitter
  std::size_t outlier_count = 0;               ///< uniform points in the bounding cube
  std::uint64_t seed = 0;

  void validate() const;
};

struct PerturbedCloud {
  PointCloud cloud;            ///< inliers first (index-aligned with the input), outliers appended
  RigidTransform ground_truth; ///< maps the input cloud onto the noise-free inliers
  std::size_t inlier_count = 0;
};

/// Rigid motion, then Gaussian jitter, then outliers drawn uniformly in the
/// axis-aligned bounding cube of the moved, noise-free cloud.
PerturbedCloud perturb(const PointCloud& cloud, const PerturbationSpec& spec);

/// Asymmetric surface-sampled test object (body, head, two ears, tail),
/// roughly bunny-shaped, already normalized.
PointCloud make_synthetic_cloud(std::size_t n, std::uint64_t seed);

/// Fraction of the ground-truth matches recovered: template point i
/// (i < inlier_count) matches reference point i, and counts as correct when
/// the estimated pose puts it within `threshold` of that reference point.
double match_precision(const RigidTransform& estimated, const PointCloud& template_cloud,
                       const PointCloud& reference, std::size_t inlier_count, double threshold = 1e-3);

/// RMS of |E x_i - y_i| over the index-aligned inliers.
double rms_inlier_residual(const RigidTransform& estimated, const PointCloud& template_cloud,
                           const PointCloud& reference, std::size_t inlier_count);

struct TrialRow {
  std::size_t trial_id = 0;
  std::size_t condition_index = 0;
  double condition_value = 0.0;
  PerturbationSpec spec;

  double rotation_error_deg = 0.0;
  double translation_error = 0.0;
  double rms_inlier_residual = 0.0;
  double precision = 0.0;
  // Same metrics for the coarse (MPE-only) pose.
  double coarse_rotation_error_deg = 0.0;
  double coarse_translation_error = 0.0;
  double coarse_rms_inlier_residual = 0.0;

  StageTimings timings;
  int mpe_iterations = 0;
  int icp_iterations = 0;
  bool converged = false;
  std::string failure;
};

struct Stat {
  double mean = 0.0;
  double variance = 0.0;  ///< sample variance (n - 1); 0 for a single value
};

Stat describe(const std::vector<double>& values);

struct ConditionSummary {
  std::size_t condition_index = 0;
  double condition_value = 0.0;
  std::size_t trials = 0;
  std::size_t converged = 0;
  Stat rotation_error_deg;
  Stat translation_error;
  Stat rms_inlier_residual;
  Stat precision;
  Stat coarse_rms_inlier_residual;
  Stat coarse_ms;
  Stat total_ms;
};

struct ExperimentReport {
  std::string experiment;   ///< "noise", "outliers" or "sampling"
  std::string condition;    ///< "sigma", "outlier_count" or "sample_ratio"
  std::vector<TrialRow> rows;  ///< sorted by trial_id
  std::vector<ConditionSummary> summaries;
};

/// Per-condition aggregates, in order of condition_index.
std::vector<ConditionSummary> summarize(const std::vector<TrialRow>& rows);

struct SweepOptions {
  std::uint64_t seed = 0;
  double rotation_max = std::numbers::pi / 2;
  double translation_max = 0.3;
  double gaussian_sigma = 0.0;      ///< used by sweeps that do not vary it
  std::size_t outlier_count = 0;    ///< used by sweeps that do not vary it
  unsigned threads = 1;
};

/// Worker count from MPEREG_THREADS, else the hardware concurrency.
unsigned default_thread_count();

/// One perturb -> mpl_register -> metrics run. `reference` must already be
/// normalized. Registration failures are recorded, not thrown.
TrialRow run_trial(const PointCloud& reference, const PerturbationSpec& spec, const MplConfig& config);

ExperimentReport run_noise_sweep(const PointCloud& reference, const std::vector<double>& sigmas,
                                 std::size_t trials_per_sigma, const MplConfig& config,
                                 const SweepOptions& options = {});

ExperimentReport run_outlier_sweep(const PointCloud& reference, const std::vector<std::size_t>& counts,
                                   std::size_t trials, const MplConfig& config,
                                   const SweepOptions& options = {});

/// Overrides config.sampling with each ratio in turn.
ExperimentReport run_sampling_sweep(const PointCloud& reference, const std::vector<double>& ratios,
                                    std::size_t trials, const MplConfig& config,
                                    const SweepOptions& options = {});

/// Planar two-cluster toy registered by plain least squares on all pairs
/// and by the P2-driven MPE solver.
struct P2ToyRecord {
  std::uint64_t seed = 0;
  double outlier_scale = 0.0;  ///< pair separation over cloud diameter; 0 = no outlier
  std::size_t inlier_count = 0;
  RigidTransform truth;
  RigidTransform l2_pose;
  RigidTransform p2_pose;
  double l2_rotation_error_deg = 0.0;
  double p2_rotation_error_deg = 0.0;
  double l2_inlier_rms = 0.0;
  double p2_inlier_rms = 0.0;
  double outlier_pair_distance = 0.0;  ///< under the P2 pose
  double outlier_p2_residual = 0.0;
};

/// Solver settings for the toy: softening 0.1, matched to its point spacing
/// (about 0.1, versus about 0.02 for a 200-point sample of a unit cloud).
MpeConfig p2_toy_mpe_config();

P2ToyRecord run_p2_toy(std::uint64_t seed, double outlier_scale = 10.0,
                       const MpeConfig& config = p2_toy_mpe_config());

}  // namespace mpereg
