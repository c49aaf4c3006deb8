#include "doctest.h"
#include "support.hpp"

#include "mpereg/error.hpp"
#include "mpereg/harness.hpp"
#include "mpereg/pipeline.hpp"

#include <cmath>
#include <numbers>
#include <set>

using namespace mpereg;
using testing::Rng;

TEST_CASE("resolve_sample_size") {
  CHECK(resolve_sample_size(SampleCount{200}, 1889) == 200);
  CHECK(resolve_sample_size(SampleCount{200}, 50) == 50);
  CHECK(resolve_sample_size(SampleRatio{0.05}, 1889) == 94);
  CHECK(resolve_sample_size(SampleRatio{0.8}, 1889) == 1511);
  CHECK(resolve_sample_size(SampleRatio{1.0}, 1889) == 1889);
  CHECK_THROWS_AS(resolve_sample_size(SampleRatio{0.01}, 100), InvalidArgument);
  CHECK_THROWS_AS(resolve_sample_size(SampleCount{10}, 3), InvalidArgument);
}

TEST_CASE("config validation") {
  MplConfig c;
  CHECK_NOTHROW(c.validate());
  c.sampling = SampleCount{3};
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c.sampling = SampleRatio{0.0};
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c.sampling = SampleRatio{1.2};
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c.sampling = SampleRatio{1.0};
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("random_downsample") {
  Rng rng(1);
  const PointCloud cloud = testing::random_cloud(rng, 50);

  SUBCASE("k = n keeps every point once, in order") {
    const PointCloud all = random_downsample(cloud, cloud.size(), 7);
    REQUIRE(all.size() == cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) CHECK(all[i] == cloud[i]);
  }
  SUBCASE("k = 1 is one of the points") {
    const PointCloud one = random_downsample(cloud, 1, 8);
    REQUIRE(one.size() == 1);
    bool found = false;
    for (std::size_t i = 0; i < cloud.size(); ++i) found = found || cloud[i] == one[0];
    CHECK(found);
  }
  SUBCASE("without replacement, deterministic, weights carried") {
    std::vector<Point3> pts(cloud.points().begin(), cloud.points().end());
    std::vector<double> w;
    for (std::size_t i = 0; i < pts.size(); ++i) w.push_back(1.0 + static_cast<double>(i));
    const PointCloud weighted(pts, w);
    const PointCloud a = random_downsample(weighted, 20, 99);
    const PointCloud b = random_downsample(weighted, 20, 99);
    std::set<double> seen;
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i] == b[i]);
      seen.insert(a.weight(i));
      const auto j = static_cast<std::size_t>(a.weight(i)) - 1;
      CHECK(a[i] == weighted[j]);
    }
    CHECK(seen.size() == 20);
  }
  SUBCASE("range errors") {
    CHECK_THROWS_AS(random_downsample(cloud, 0, 1), InvalidArgument);
    CHECK_THROWS_AS(random_downsample(cloud, 51, 1), InvalidArgument);
  }
}

TEST_CASE("downsampled centroid is unbiased") {
  Rng rng(2);
  const PointCloud cloud = testing::random_cloud(rng, 500);
  const Point3 full = centroid(cloud);
  const std::size_t k = 50;
  const int seeds = 1000;

  // Population variance per axis and the finite-population standard error.
  Vector3 var = Vector3::Zero();
  for (const auto& p : cloud.points()) var += (p - full).cwiseAbs2();
  var /= static_cast<double>(cloud.size());
  const double fpc = (500.0 - k) / (500.0 - 1.0);
  const Vector3 se = (var * fpc / static_cast<double>(k) / seeds).cwiseSqrt();

  Vector3 mean = Vector3::Zero();
  for (int s = 0; s < seeds; ++s) mean += centroid(random_downsample(cloud, k, derive_seed(123, s)));
  mean /= seeds;
  for (int a = 0; a < 3; ++a) CHECK(std::abs(mean[a] - full[a]) <= 3.0 * se[a]);
}

TEST_CASE("derive_seed separates streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 50; ++s) {
    for (std::uint64_t t = 0; t < 50; ++t) seen.insert(derive_seed(s, t));
  }
  CHECK(seen.size() == 2500);
  CHECK(derive_seed(5, 6) == derive_seed(5, 6));
}

TEST_CASE("identical clouds give the identity") {
  const PointCloud cloud = make_synthetic_cloud(800, 3);
  const PointCloud scaled = NormalizationRecord{Point3(10, -4, 2), 35.0}.denormalize(cloud);
  const RegistrationReport r = mpl_register(scaled, scaled, {});
  CHECK(rotation_error_deg(r.pose, RigidTransform::identity()) < 0.1);
  CHECK(r.pose.translation().norm() < 1e-3);
}

TEST_CASE("pose maps the template in original units and stages compose") {
  const PointCloud base = make_synthetic_cloud(1000, 4);
  const NormalizationRecord units{Point3(3, 1, -7), 12.0};
  const PointCloud reference = units.denormalize(base);
  Rng rng(5);
  const RigidTransform gt = testing::random_pose(rng, 0.8, 4.0);
  const PointCloud tpl = apply_transform(reference, gt);

  MplConfig config;
  config.rng_seed = 77;
  const RegistrationReport r = mpl_register(tpl, reference, config);
  CHECK(rotation_error_deg(r.pose, gt.inverse()) < 0.1);
  CHECK(translation_error(r.pose.translation(), gt.inverse().translation()) < 1e-3 * 12.0);
  CHECK(r.template_sample_size == 200);
  CHECK(r.reference_sample_size == 200);

  // Recompute every stage independently.
  const NormalizedPair n = normalize_clouds(tpl, reference);
  const PointCloud ts = random_downsample(n.template_cloud, 200, derive_seed(77, 1));
  const PointCloud rs = random_downsample(n.reference_cloud, 200, derive_seed(77, 2));
  const MpeResult coarse = mpe_align(ts, rs, config.mpe);
  const IcpResult fine = icp_align(n.template_cloud, n.reference_cloud, coarse.pose, config.icp);
  const RigidTransform expected = n.record.denormalize(fine.pose);
  CHECK(rotation_error_deg(expected, r.pose) <= 1e-6);
  CHECK(testing::max_abs_diff(expected.translation(), r.pose.translation()) <= 1e-9);
  CHECK(r.mpe_iterations == static_cast<int>(coarse.trace.iterations.size()));
  CHECK(r.icp_iterations == fine.iterations);
  CHECK(r.icp_trimmed_mse == fine.final_trimmed_mse);

  const PointCloud mapped = apply_transform(tpl, r.pose);
  double worst = 0.0;
  for (std::size_t i = 0; i < tpl.size(); ++i) worst = std::max(worst, (mapped[i] - reference[i]).norm());
  CHECK(worst < 1e-3 * 12.0);
  CHECK(r.timings.total_ms >= r.timings.coarse_ms);
}

TEST_CASE("seeded runs are bit-identical") {
  const PointCloud cloud = make_synthetic_cloud(600, 6);
  Rng rng(7);
  const PointCloud tpl = apply_transform(cloud, testing::random_pose(rng, 1.3, 0.3));
  MplConfig config;
  config.rng_seed = 5;
  const RegistrationReport a = mpl_register(tpl, cloud, config);
  const RegistrationReport b = mpl_register(tpl, cloud, config);
  CHECK(a.pose.quaternion().coeffs() == b.pose.quaternion().coeffs());
  CHECK(a.pose.translation() == b.pose.translation());
  CHECK(a.mpe_iterations == b.mpe_iterations);
}

TEST_CASE("stage errors carry the stage name") {
  const PointCloud flat({Point3(1, 1, 1), Point3(1, 1, 1), Point3(1, 1, 1), Point3(1, 1, 1)});
  const PointCloud small({Point3(0, 0, 0), Point3(1, 0, 0), Point3(0, 1, 0)});
  CHECK_THROWS_WITH_AS(mpl_register(small, flat, {}), doctest::Contains("normalize stage: degenerate cloud"),
                       DegenerateError);
  CHECK_THROWS_WITH_AS(mpl_register(small, small, {}), doctest::Contains("downsample stage"), InvalidArgument);
}
