#include "mpereg/harness.hpp"

#include "mpereg/error.hpp"
#include "mpereg/force_field.hpp"
#include "mpereg/icp.hpp"
#include "mpereg/spatial_index.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <thread>

namespace mpereg {

namespace {

Vector3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  for (;;) {
    const Vector3 v(g(rng), g(rng), g(rng));
    const double n = v.norm();
    if (n > 1e-9) return v / n;
  }
}

struct Ellipsoid {
  Vector3 center;
  Vector3 radii;
  double share;  // fraction of the surface samples
};

void run_jobs(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) job(i);
    });
  }
}

using SpecFor = std::function<PerturbationSpec(std::size_t condition, std::size_t trial)>;
using ConfigFor = std::function<MplConfig(std::size_t condition, const PerturbationSpec& spec)>;

ExperimentReport run_sweep(std::string experiment, std::string condition, const PointCloud& reference,
                           const std::vector<double>& values, std::size_t trials, unsigned threads,
                           const SpecFor& spec_for, const ConfigFor& config_for) {
  if (values.empty()) throw InvalidArgument("sweep needs at least one condition");
  if (trials == 0) throw InvalidArgument("sweep needs at least one trial per condition");

  const PointCloud normalized = normalize_clouds(reference, reference).reference_cloud;
  ExperimentReport report{std::move(experiment), std::move(condition), {}, {}};
  report.rows.resize(values.size() * trials);

  run_jobs(report.rows.size(), threads, [&](std::size_t job) {
    const std::size_t ci = job / trials;
    const std::size_t t = job % trials;
    const PerturbationSpec spec = spec_for(ci, t);
    TrialRow row = run_trial(normalized, spec, config_for(ci, spec));
    row.trial_id = job;
    row.condition_index = ci;
    row.condition_value = values[ci];
    report.rows[job] = std::move(row);
  });
  report.summaries = summarize(report.rows);
  return report;
}

// Trial t draws the same motion under every condition of a sweep.
PerturbationSpec base_spec(const SweepOptions& options, std::size_t trial) {
  PerturbationSpec spec;
  spec.rotation_max = options.rotation_max;
  spec.translation_max = options.translation_max;
  spec.gaussian_sigma = options.gaussian_sigma;
  spec.outlier_count = options.outlier_count;
  spec.seed = derive_seed(options.seed, trial);
  return spec;
}

MplConfig seeded(MplConfig config, const PerturbationSpec& spec) {
  config.rng_seed = derive_seed(spec.seed, 0x5eed);
  return config;
}

}  // namespace

void PerturbationSpec::validate() const {
  if (!(rotation_max >= 0.0 && rotation_max <= std::numbers::pi)) {
    throw InvalidArgument("rotation range must lie in [0, pi]");
  }
  if (!(translation_max >= 0.0)) throw InvalidArgument("translation range must be >= 0");
  if (!(gaussian_sigma >= 0.0)) throw InvalidArgument("gaussian sigma must be >= 0");
}

PerturbedCloud perturb(const PointCloud& cloud, const PerturbationSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const Vector3 axis = random_unit(rng);
  const double angle = spec.rotation_max * unit(rng);
  const Vector3 direction = random_unit(rng);
  const double length = spec.translation_max * unit(rng);
  const RigidTransform gt = RigidTransform::from_axis_angle(axis, angle, length * direction);

  const PointCloud moved = apply_transform(cloud, gt);
  std::vector<Point3> pts(moved.points().begin(), moved.points().end());
  if (spec.gaussian_sigma > 0.0) {
    std::normal_distribution<double> jitter(0.0, spec.gaussian_sigma);
    for (auto& p : pts) p += Vector3(jitter(rng), jitter(rng), jitter(rng));
  }

  std::vector<double> weights(cloud.weights().begin(), cloud.weights().end());
  if (spec.outlier_count > 0) {
    const auto [lo, hi] = moved.bounds();
    const Point3 mid = (lo + hi) / 2.0;
    const double half = (hi - lo).maxCoeff() / 2.0;
    std::uniform_real_distribution<double> side(-half, half);
    for (std::size_t k = 0; k < spec.outlier_count; ++k) {
      pts.push_back(mid + Vector3(side(rng), side(rng), side(rng)));
      if (!weights.empty()) weights.push_back(1.0);
    }
  }
  return {PointCloud(std::move(pts), std::move(weights)), gt, cloud.size()};
}

PointCloud make_synthetic_cloud(std::size_t n, std::uint64_t seed) {
  if (n < 4) throw InvalidArgument("synthetic cloud needs at least 4 points");
  static const std::vector<Ellipsoid> parts = {
      {{0.00, 0.00, 0.00}, {0.50, 0.35, 0.30}, 0.55},   // body
      {{0.45, 0.15, 0.20}, {0.20, 0.18, 0.17}, 0.20},   // head
      {{0.50, 0.10, 0.45}, {0.05, 0.04, 0.20}, 0.08},   // ear
      {{0.40, 0.25, 0.45}, {0.05, 0.04, 0.18}, 0.07},   // ear
      {{-0.45, 0.00, 0.05}, {0.10, 0.10, 0.10}, 0.10},  // tail
  };
  std::mt19937_64 rng(seed);
  std::vector<double> shares;
  for (const auto& e : parts) shares.push_back(e.share);
  std::discrete_distribution<std::size_t> which(shares.begin(), shares.end());
  std::vector<Point3> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Ellipsoid& e = parts[which(rng)];
    pts.push_back(e.center + e.radii.cwiseProduct(random_unit(rng)));
  }
  PointCloud raw(std::move(pts));
  return normalize_clouds(raw, raw).reference_cloud;
}

double match_precision(const RigidTransform& estimated, const PointCloud& template_cloud,
                       const PointCloud& reference, std::size_t inlier_count, double threshold) {
  if (!(threshold > 0.0)) throw InvalidArgument("precision threshold must be > 0");
  const std::size_t n = std::min({inlier_count, template_cloud.size(), reference.size()});
  if (n == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if ((estimated.apply(template_cloud[i]) - reference[i]).norm() < threshold) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

double rms_inlier_residual(const RigidTransform& estimated, const PointCloud& template_cloud,
                           const PointCloud& reference, std::size_t inlier_count) {
  const std::size_t n = std::min({inlier_count, template_cloud.size(), reference.size()});
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += (estimated.apply(template_cloud[i]) - reference[i]).squaredNorm();
  return std::sqrt(sum / static_cast<double>(n));
}

Stat describe(const std::vector<double>& values) {
  Stat s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.variance = ss / static_cast<double>(values.size() - 1);
  }
  return s;
}

std::vector<ConditionSummary> summarize(const std::vector<TrialRow>& rows) {
  std::size_t conditions = 0;
  for (const auto& r : rows) conditions = std::max(conditions, r.condition_index + 1);
  std::vector<ConditionSummary> out(conditions);
  for (std::size_t c = 0; c < conditions; ++c) {
    std::vector<double> rot, trans, rms, prec, coarse_rms, coarse_ms, total_ms;
    auto& s = out[c];
    s.condition_index = c;
    for (const auto& r : rows) {
      if (r.condition_index != c) continue;
      s.condition_value = r.condition_value;
      ++s.trials;
      if (r.converged) ++s.converged;
      rot.push_back(r.rotation_error_deg);
      trans.push_back(r.translation_error);
      rms.push_back(r.rms_inlier_residual);
      prec.push_back(r.precision);
      coarse_rms.push_back(r.coarse_rms_inlier_residual);
      coarse_ms.push_back(r.timings.coarse_ms);
      total_ms.push_back(r.timings.total_ms);
    }
    s.rotation_error_deg = describe(rot);
    s.translation_error = describe(trans);
    s.rms_inlier_residual = describe(rms);
    s.precision = describe(prec);
    s.coarse_rms_inlier_residual = describe(coarse_rms);
    s.coarse_ms = describe(coarse_ms);
    s.total_ms = describe(total_ms);
  }
  return out;
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("MPEREG_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

TrialRow run_trial(const PointCloud& reference, const PerturbationSpec& spec, const MplConfig& config) {
  TrialRow row;
  row.spec = spec;
  const PerturbedCloud perturbed = perturb(reference, spec);
  const RigidTransform truth = perturbed.ground_truth.inverse();
  try {
    const RegistrationReport rep = mpl_register(perturbed.cloud, reference, config);
    const RigidTransform coarse = rep.normalization.denormalize(rep.coarse_pose_normalized);
    const auto n = perturbed.inlier_count;

    row.rotation_error_deg = rotation_error_deg(truth, rep.pose);
    row.translation_error = translation_error(truth.translation(), rep.pose.translation());
    row.rms_inlier_residual = rms_inlier_residual(rep.pose, perturbed.cloud, reference, n);
    row.precision = match_precision(rep.pose, perturbed.cloud, reference, n);
    row.coarse_rotation_error_deg = rotation_error_deg(truth, coarse);
    row.coarse_translation_error = translation_error(truth.translation(), coarse.translation());
    row.coarse_rms_inlier_residual = rms_inlier_residual(coarse, perturbed.cloud, reference, n);
    row.timings = rep.timings;
    row.mpe_iterations = rep.mpe_iterations;
    row.icp_iterations = rep.icp_iterations;
    row.converged = rep.mpe_status != MpeStatus::kMaxIterations;
  } catch (const Error& e) {
    row.failure = e.what();
    row.converged = false;
    row.rotation_error_deg = 180.0;
    row.translation_error = std::numeric_limits<double>::infinity();
    row.rms_inlier_residual = std::numeric_limits<double>::infinity();
    row.coarse_rotation_error_deg = 180.0;
    row.coarse_translation_error = std::numeric_limits<double>::infinity();
    row.coarse_rms_inlier_residual = std::numeric_limits<double>::infinity();
  }
  return row;
}

ExperimentReport run_noise_sweep(const PointCloud& reference, const std::vector<double>& sigmas,
                                 std::size_t trials_per_sigma, const MplConfig& config,
                                 const SweepOptions& options) {
  return run_sweep(
      "noise", "sigma", reference, sigmas, trials_per_sigma, options.threads,
      [&](std::size_t c, std::size_t t) {
        PerturbationSpec spec = base_spec(options, t);
        spec.gaussian_sigma = sigmas[c];
        return spec;
      },
      [&](std::size_t, const PerturbationSpec& spec) { return seeded(config, spec); });
}

ExperimentReport run_outlier_sweep(const PointCloud& reference, const std::vector<std::size_t>& counts,
                                   std::size_t trials, const MplConfig& config, const SweepOptions& options) {
  const std::vector<double> values(counts.begin(), counts.end());
  return run_sweep(
      "outliers", "outlier_count", reference, values, trials, options.threads,
      [&](std::size_t c, std::size_t t) {
        PerturbationSpec spec = base_spec(options, t);
        spec.outlier_count = counts[c];
        return spec;
      },
      [&](std::size_t, const PerturbationSpec& spec) { return seeded(config, spec); });
}

ExperimentReport run_sampling_sweep(const PointCloud& reference, const std::vector<double>& ratios,
                                    std::size_t trials, const MplConfig& config, const SweepOptions& options) {
  for (double r : ratios) {
    if (!(r > 0.0 && r <= 1.0)) throw InvalidArgument("sampling ratios must lie in (0, 1]");
  }
  return run_sweep(
      "sampling", "sample_ratio", reference, ratios, trials, options.threads,
      [&](std::size_t, std::size_t t) { return base_spec(options, t); },
      [&](std::size_t c, const PerturbationSpec& spec) {
        MplConfig cfg = seeded(config, spec);
        cfg.sampling = SampleRatio{ratios[c]};
        return cfg;
      });
}

MpeConfig p2_toy_mpe_config() {
  MpeConfig config;
  config.force.softening = 0.1;
  return config;
}

P2ToyRecord run_p2_toy(std::uint64_t seed, double outlier_scale, const MpeConfig& config) {
  if (!(outlier_scale >= 0.0)) throw InvalidArgument("outlier scale must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Two planar clusters of unequal size at z = 0.
  std::vector<Point3> ref;
  for (int i = 0; i < 12; ++i) ref.emplace_back(-0.35 + 0.08 * g(rng), -0.10 + 0.08 * g(rng), 0.0);
  for (int i = 0; i < 8; ++i) ref.emplace_back(0.30 + 0.06 * g(rng), 0.15 + 0.06 * g(rng), 0.0);
  const std::size_t inliers = ref.size();

  P2ToyRecord rec;
  rec.seed = seed;
  rec.outlier_scale = outlier_scale;
  rec.inlier_count = inliers;

  const double angle = (10.0 + 20.0 * unit(rng)) * std::numbers::pi / 180.0 * (unit(rng) < 0.5 ? -1.0 : 1.0);
  const double heading = 2.0 * std::numbers::pi * unit(rng);
  const Vector3 shift = 0.1 * unit(rng) * Vector3(std::cos(heading), std::sin(heading), 0.0);
  rec.truth = RigidTransform::from_axis_angle(Vector3::UnitZ(), angle, shift);
  const RigidTransform back = rec.truth.inverse();

  std::vector<Point3> tpl;
  for (const auto& y : ref) tpl.push_back(back.apply(y));

  if (outlier_scale > 0.0) {
    double diameter = 0.0;
    for (std::size_t i = 0; i < inliers; ++i) {
      for (std::size_t j = i + 1; j < inliers; ++j) diameter = std::max(diameter, (ref[i] - ref[j]).norm());
    }
    Point3 mid = Point3::Zero();
    for (const auto& y : ref) mid += y;
    mid /= static_cast<double>(inliers);
    // Both ends sit outlier_scale * diameter from the cluster centre, 60 degrees
    // apart, so under the true pose the pair is outlier_scale * diameter long.
    const double reach = outlier_scale * diameter;
    const double phi = 2.0 * std::numbers::pi * unit(rng);
    const double psi = phi + std::numbers::pi / 3.0;
    ref.push_back(mid + reach * Vector3(std::cos(phi), std::sin(phi), 0.0));
    tpl.push_back(back.apply(mid + reach * Vector3(std::cos(psi), std::sin(psi), 0.0)));
  }

  const PointCloud reference(ref);
  const PointCloud template_cloud(tpl);

  std::vector<PointPair> pairs;
  for (std::size_t i = 0; i < tpl.size(); ++i) pairs.emplace_back(tpl[i], ref[i]);
  rec.l2_pose = best_rigid_fit(pairs);
  rec.p2_pose = mpe_align(template_cloud, reference, config).pose;

  rec.l2_rotation_error_deg = rotation_error_deg(rec.truth, rec.l2_pose);
  rec.p2_rotation_error_deg = rotation_error_deg(rec.truth, rec.p2_pose);
  rec.l2_inlier_rms = rms_inlier_residual(rec.l2_pose, template_cloud, reference, inliers);
  rec.p2_inlier_rms = rms_inlier_residual(rec.p2_pose, template_cloud, reference, inliers);
  if (outlier_scale > 0.0) {
    const double d2 = (rec.p2_pose.apply(tpl.back()) - ref.back()).squaredNorm();
    rec.outlier_pair_distance = std::sqrt(d2);
    rec.outlier_p2_residual = p2_residual(d2, config.force);
  }
  return rec;
}

}  // namespace mpereg
