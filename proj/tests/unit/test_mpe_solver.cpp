#include "doctest.h"
#include "support.hpp"

#include "mpereg/error.hpp"
#include "mpereg/harness.hpp"
#include "mpereg/mpe_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

using namespace mpereg;
using testing::Rng;

namespace {

PointCloud normalized(const PointCloud& c) { return normalize_clouds(c, c).reference_cloud; }

// Step s equals s0 / 2^m for an integer m >= 0.
bool is_halving_of(double s, double s0) {
  const double m = std::log2(s0 / s);
  return m >= 0.0 && std::abs(m - std::round(m)) < 1e-12;
}

void check_trace_invariants(const MpeTrace& trace, const MpeConfig& config) {
  double prev_r = config.initial_rot_step;
  double prev_t = config.initial_trans_step;
  for (const auto& it : trace.iterations) {
    CHECK(it.rot_step <= prev_r);
    CHECK(it.trans_step <= prev_t);
    CHECK(is_halving_of(it.rot_step, config.initial_rot_step));
    CHECK(is_halving_of(it.trans_step, config.initial_trans_step));
    CHECK((it.rot_flag < 0.0) == (it.rot_step == prev_r / 2.0));
    CHECK((it.rot_flag < 0.0) != (it.rot_step == prev_r));
    CHECK((it.trans_flag < 0.0) == (it.trans_step == prev_t / 2.0));
    CHECK((it.trans_flag < 0.0) != (it.trans_step == prev_t));
    const Matrix3 r = it.pose.rotation();
    CHECK((r * r.transpose() - Matrix3::Identity()).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(std::abs(r.determinant() - 1.0) <= 1e-9);
    prev_r = it.rot_step;
    prev_t = it.trans_step;
  }
}

}  // namespace

TEST_CASE("config validation") {
  MpeConfig c;
  CHECK_NOTHROW(c.validate());
  c.rot_threshold = 0.3;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.initial_trans_step = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.max_iterations = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.force.softening = -1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("aligned clouds stop at the first iteration") {
  Rng rng(1);
  const PointCloud x = normalized(testing::anisotropic_cloud(rng, 100));
  const MpeResult r = mpe_align(x, x, {});
  CHECK(r.trace.status == MpeStatus::kForcesVanished);
  REQUIRE(r.trace.iterations.size() == 1);
  CHECK(r.trace.iterations[0].rot_flag == 0.0);
  CHECK(r.trace.iterations[0].trans_flag == 0.0);
  CHECK(rotation_error_deg(r.pose, RigidTransform::identity()) < 1e-6);
  CHECK(r.pose.translation().norm() < 1e-9);
}

TEST_CASE("pure translation offset is recovered") {
  Rng rng(2);
  const PointCloud ref = normalized(testing::anisotropic_cloud(rng, 100));
  const PointCloud tpl = apply_transform(ref, RigidTransform::from_translation({0.2, 0, 0}));
  const MpeConfig config;
  const MpeResult r = mpe_align(tpl, ref, config);
  CHECK(r.trace.status != MpeStatus::kMaxIterations);
  CHECK(translation_error(r.pose.translation(), Vector3(-0.2, 0, 0)) <= config.trans_threshold);
  CHECK(rotation_error_deg(r.pose, RigidTransform::identity()) < 2.0);
  check_trace_invariants(r.trace, config);
}

TEST_CASE("trace invariants over random problems") {
  Rng rng(3);
  const PointCloud cloud = make_synthetic_cloud(300, 11);
  for (int k = 0; k < 10; ++k) {
    const PointCloud tpl = apply_transform(cloud, testing::random_pose(rng, std::numbers::pi / 2, 0.3));
    for (ForceDrive drive : {ForceDrive::kRigidBody, ForceDrive::kUnitRadial}) {
      MpeConfig config;
      config.drive = drive;
      const MpeResult r = mpe_align(tpl, cloud, config);
      REQUIRE(!r.trace.iterations.empty());
      CHECK(r.trace.iterations.front().rot_flag == 0.0);
      CHECK(r.trace.iterations.front().trans_flag == 0.0);
      check_trace_invariants(r.trace, config);
      if (r.trace.status == MpeStatus::kConverged) {
        CHECK(r.trace.iterations.back().rot_step <= config.rot_threshold);
        CHECK(r.trace.iterations.back().trans_step <= config.trans_threshold);
      }
    }
  }
}

TEST_CASE("moderate rotations are undone") {
  Rng rng(4);
  const PointCloud cloud = make_synthetic_cloud(400, 12);
  int good = 0;
  for (int k = 0; k < 10; ++k) {
    const RigidTransform gt = testing::random_pose(rng, 0.35, 0.05);
    const MpeResult r = mpe_align(apply_transform(cloud, gt), cloud, {});
    if (rotation_error_deg(r.pose, gt.inverse()) < 2.0) ++good;
  }
  CHECK(good >= 9);
}

TEST_CASE("iteration cap is a status, not an error") {
  Rng rng(5);
  const PointCloud cloud = make_synthetic_cloud(200, 13);
  MpeConfig config;
  config.max_iterations = 3;
  const MpeResult r = mpe_align(apply_transform(cloud, testing::random_pose(rng, 1.0, 0.2)), cloud, config);
  CHECK(r.trace.status == MpeStatus::kMaxIterations);
  CHECK(r.trace.iterations.size() == 3);
  CHECK(to_string(r.trace.status) == "max-iterations");
}

TEST_CASE("fixed center is carried with the template") {
  Rng rng(6);
  const PointCloud cloud = make_synthetic_cloud(200, 14);
  const RigidTransform gt = testing::random_pose(rng, 0.3, 0.05);
  MpeConfig config;
  config.fixed_center = Point3(0.05, -0.02, 0.01);
  const MpeResult r = mpe_align(apply_transform(cloud, gt), cloud, config);
  check_trace_invariants(r.trace, config);
  CHECK(rotation_error_deg(r.pose, gt.inverse()) < 5.0);
}

TEST_CASE("solve is deterministic") {
  Rng rng(7);
  const PointCloud cloud = make_synthetic_cloud(200, 15);
  const PointCloud tpl = apply_transform(cloud, testing::random_pose(rng, 1.2, 0.3));
  const MpeResult a = mpe_align(tpl, cloud, {});
  const MpeResult b = mpe_align(tpl, cloud, {});
  REQUIRE(a.trace.iterations.size() == b.trace.iterations.size());
  for (std::size_t i = 0; i < a.trace.iterations.size(); ++i) {
    const auto& x = a.trace.iterations[i];
    const auto& y = b.trace.iterations[i];
    CHECK(x.rot_flag == y.rot_flag);
    CHECK(x.trans_flag == y.trans_flag);
    CHECK(x.p2_energy == y.p2_energy);
    CHECK(x.pose.quaternion().coeffs() == y.pose.quaternion().coeffs());
    CHECK(x.pose.translation() == y.pose.translation());
  }
}

TEST_CASE("rotating the whole problem conjugates the solution") {
  Rng rng(8);
  const PointCloud cloud = make_synthetic_cloud(250, 16);
  int agree = 0;
  const int runs = 10;
  for (int k = 0; k < runs; ++k) {
    const RigidTransform gt = testing::random_pose(rng, std::numbers::pi / 2, 0.3);
    const PointCloud tpl = apply_transform(cloud, gt);
    const RigidTransform q = RigidTransform::from_axis_angle(testing::random_unit(rng), 1.1);
    const MpeResult a = mpe_align(tpl, cloud, {});
    const MpeResult b = mpe_align(apply_transform(tpl, q), apply_transform(cloud, q), {});
    const double ea = rotation_error_deg(gt.inverse(), a.pose);
    const double eb = rotation_error_deg(compose(q, compose(gt.inverse(), q.inverse())), b.pose);
    if (std::abs(ea - eb) <= 1e-3) ++agree;
  }
  // Roundoff can flip a near-zero flag and send one run down a different path.
  CHECK(agree >= runs - 1);
}

TEST_CASE("trace CSV") {
  Rng rng(9);
  const PointCloud cloud = make_synthetic_cloud(100, 17);
  const MpeResult r = mpe_align(apply_transform(cloud, testing::random_pose(rng, 0.5, 0.1)), cloud, {});
  std::ostringstream out;
  r.trace.write_csv(out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "iteration,s_R,s_t,F_R,F_t,p2_energy,qw,qx,qy,qz,tx,ty,tz");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 12);
    ++rows;
  }
  CHECK(rows == r.trace.iterations.size());
}
