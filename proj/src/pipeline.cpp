#include "mpereg/pipeline.hpp"

#include "mpereg/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace mpereg {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

template <class E>
[[noreturn]] void rethrow_in_stage(const char* stage, const E& e) {
  throw E(std::string(stage) + " stage: " + e.what());
}

template <class F>
auto run_stage(const char* stage, F&& f) {
  try {
    return f();
  } catch (const DegenerateError& e) {
    rethrow_in_stage(stage, e);
  } catch (const InvalidArgument& e) {
    rethrow_in_stage(stage, e);
  }
}

}  // namespace

void MplConfig::validate() const {
  if (const auto* c = std::get_if<SampleCount>(&sampling); c && c->value < 4) {
    throw InvalidArgument("sample size must be >= 4");
  }
  if (const auto* r = std::get_if<SampleRatio>(&sampling); r && !(r->value > 0.0 && r->value <= 1.0)) {
    throw InvalidArgument("sample ratio must lie in (0, 1]");
  }
  mpe.validate();
  icp.validate();
}

std::size_t resolve_sample_size(const Sampling& sampling, std::size_t n) {
  std::size_t k = 0;
  if (const auto* c = std::get_if<SampleCount>(&sampling)) {
    k = std::min(c->value, n);
  } else {
    const double r = std::get<SampleRatio>(sampling).value;
    k = std::min<std::size_t>(n, static_cast<std::size_t>(std::llround(r * static_cast<double>(n))));
  }
  if (k < 4) throw InvalidArgument("coarse-stage sample has " + std::to_string(k) + " points; need >= 4");
  return k;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over the pair
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

PointCloud random_downsample(const PointCloud& cloud, std::size_t k, std::uint64_t seed) {
  const std::size_t n = cloud.size();
  if (k < 1 || k > n) {
    throw InvalidArgument("downsample size " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first k slots become a uniform k-subset.
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return cloud.select(idx);
}

RegistrationReport mpl_register(const PointCloud& template_cloud, const PointCloud& reference,
                                const MplConfig& config) {
  config.validate();
  const auto start = Clock::now();
  RegistrationReport report;

  const NormalizedPair norm = run_stage("normalize", [&] { return normalize_clouds(template_cloud, reference); });
  report.normalization = norm.record;

  auto t0 = Clock::now();
  const PointCloud template_sample = run_stage("downsample", [&] {
    const std::size_t k = resolve_sample_size(config.sampling, norm.template_cloud.size());
    return random_downsample(norm.template_cloud, k, derive_seed(config.rng_seed, 1));
  });
  const PointCloud reference_sample = run_stage("downsample", [&] {
    const std::size_t k = resolve_sample_size(config.sampling, norm.reference_cloud.size());
    return random_downsample(norm.reference_cloud, k, derive_seed(config.rng_seed, 2));
  });
  report.template_sample_size = template_sample.size();
  report.reference_sample_size = reference_sample.size();
  report.timings.downsample_ms = elapsed_ms(t0);

  t0 = Clock::now();
  const MpeResult coarse = run_stage("coarse", [&] { return mpe_align(template_sample, reference_sample, config.mpe); });
  report.timings.coarse_ms = elapsed_ms(t0);
  report.coarse_pose_normalized = coarse.pose;
  report.mpe_status = coarse.trace.status;
  report.mpe_iterations = static_cast<int>(coarse.trace.iterations.size());
  if (!coarse.trace.iterations.empty()) {
    const auto& last = coarse.trace.iterations.back();
    report.mpe_final_rot_step = last.rot_step;
    report.mpe_final_trans_step = last.trans_step;
    report.mpe_final_p2_energy = last.p2_energy;
  }

  t0 = Clock::now();
  const IcpResult fine = run_stage("fine", [&] {
    return icp_align(norm.template_cloud, norm.reference_cloud, coarse.pose, config.icp);
  });
  report.timings.fine_ms = elapsed_ms(t0);
  report.fine_pose_normalized = fine.pose;
  report.icp_iterations = fine.iterations;
  report.icp_trimmed_mse = fine.final_trimmed_mse;

  report.pose = norm.record.denormalize(fine.pose);
  report.timings.total_ms = elapsed_ms(start);
  return report;
}

}  // namespace mpereg
