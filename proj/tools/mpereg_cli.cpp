// mpereg: rigid point-cloud registration by minimum potential energy.
//
//   mpereg register --template A.ply --reference B.ply --out pose.json
//   mpereg bench-noise|bench-outliers|bench-sampling --csv rows.csv --json summary.json
//   mpereg toy-p2 --seed 3
//   mpereg perturb --input B.ply --out-cloud A.ply --out-pose gt.json
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include "mpereg/error.hpp"
#include "mpereg/harness.hpp"
#include "mpereg/io.hpp"
#include "mpereg/pipeline.hpp"
#include "mpereg/report.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace mpereg;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// "a:b:step" (inclusive) or "a,b,c".
std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  auto to_double = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || s.empty()) throw UsageError("bad number '" + s + "' in list '" + text + "'");
    return v;
  };
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw UsageError("range must be start:stop:step, got '" + text + "'");
    const double start = to_double(parts[0]);
    const double stop = to_double(parts[1]);
    const double step = to_double(parts[2]);
    if (!(step > 0.0) || stop < start) throw UsageError("empty or reversed range '" + text + "'");
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (long i = 0; i < n; ++i) {
      // Snap to 12 decimals so 0.05 + 2 * 0.05 prints as 0.15.
      out.push_back(std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12);
    }
    return out;
  }
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ',');) out.push_back(to_double(p));
  if (out.empty()) throw UsageError("empty list");
  return out;
}

struct MplOptions {
  std::optional<std::size_t> sample_size;
  std::optional<double> sample_ratio;
  MplConfig config;
};

void add_mpl_options(CLI::App* app, MplOptions& o, bool with_sampling = true) {
  auto& c = o.config;
  if (with_sampling) {
    auto* size = app->add_option("--sample-size", o.sample_size, "Points kept per cloud for the coarse stage (default 200)");
    auto* ratio = app->add_option("--sample-ratio", o.sample_ratio, "Fraction kept per cloud for the coarse stage, in (0,1]");
    size->excludes(ratio);
  }
  app->add_option("--softening", c.mpe.force.softening, "Force softening epsilon, normalized units")->capture_default_str();
  app->add_option("--strength", c.mpe.force.strength, "Force strength K")->capture_default_str();
  app->add_option("--rot-step", c.mpe.initial_rot_step, "Initial MPE rotation step, radians")->capture_default_str();
  app->add_option("--trans-step", c.mpe.initial_trans_step, "Initial MPE translation step, normalized")->capture_default_str();
  app->add_option("--rot-threshold", c.mpe.rot_threshold, "MPE rotation step threshold, radians")->capture_default_str();
  app->add_option("--trans-threshold", c.mpe.trans_threshold, "MPE translation step threshold, normalized")->capture_default_str();
  app->add_option("--mpe-max-iter", c.mpe.max_iterations, "MPE iteration cap")->capture_default_str();
  app->add_option("--drive", c.mpe.drive, "MPE force decomposition: rigid-body or unit-radial")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, ForceDrive>{{"rigid-body", ForceDrive::kRigidBody}, {"unit-radial", ForceDrive::kUnitRadial}},
          CLI::ignore_case))
      ->default_str("rigid-body");
  app->add_option("--icp-max-iter", c.icp.max_iterations, "ICP iteration cap")->capture_default_str();
  app->add_option("--icp-tolerance", c.icp.mse_tolerance, "ICP stop when trimmed MSE improves by less")->capture_default_str();
  app->add_option("--trim-ratio", c.icp.trim_ratio, "Fraction of template points kept by trimmed ICP, (0,1]")->capture_default_str();
}

MplConfig resolve(const MplOptions& o, std::uint64_t seed) {
  MplConfig c = o.config;
  c.rng_seed = seed;
  if (o.sample_size) c.sampling = SampleCount{*o.sample_size};
  if (o.sample_ratio) c.sampling = SampleRatio{*o.sample_ratio};
  c.validate();
  return c;
}

struct BenchOptions {
  std::string reference;
  std::size_t points = 1889;
  std::uint64_t cloud_seed = 1;
  std::size_t trials = 10;
  double rotation_max = std::numbers::pi / 2;
  double translation_max = 0.3;
  double sigma = 0.0;
  std::size_t outliers = 0;
  std::string csv;
  std::string json;
};

void add_bench_options(CLI::App* app, BenchOptions& b) {
  app->add_option("--reference", b.reference, "Reference cloud (PLY/XYZ); a synthetic cloud when omitted");
  app->add_option("--points", b.points, "Synthetic cloud size")->capture_default_str();
  app->add_option("--cloud-seed", b.cloud_seed, "Synthetic cloud seed")->capture_default_str();
  app->add_option("--trials", b.trials, "Trials per condition")->capture_default_str();
  app->add_option("--rotation-max", b.rotation_max, "Largest random rotation, radians")->capture_default_str();
  app->add_option("--translation-max", b.translation_max, "Largest random translation, normalized")->capture_default_str();
  app->add_option("--csv", b.csv, "Per-trial CSV output")->required();
  app->add_option("--json", b.json, "Per-condition JSON summary output")->required();
}

PointCloud bench_reference(const BenchOptions& b) {
  return b.reference.empty() ? make_synthetic_cloud(b.points, b.cloud_seed) : read_cloud(b.reference);
}

void write_bench(const ExperimentReport& report, const BenchOptions& b, bool with_timings, bool verbose) {
  std::ofstream csv(b.csv);
  if (!csv) throw IoError(b.csv, "cannot open for writing");
  write_trials_csv(csv, report, with_timings);
  if (!csv) throw IoError(b.csv, "write failed");
  write_json(experiment_summary_to_json(report, with_timings), b.json);
  if (verbose) {
    for (const auto& s : report.summaries) {
      std::cerr << report.condition << "=" << s.condition_value << "  rot_err=" << s.rotation_error_deg.mean
                << " deg  rms=" << s.rms_inlier_residual.mean << "  coarse_ms=" << s.coarse_ms.mean << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rigid point-cloud registration by minimum potential energy (coarse) and trimmed ICP (fine)"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  unsigned threads = default_thread_count();
  bool verbose = false;
  bool omit_timings = false;
  app.add_option("--seed", seed, "Random seed")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads for benchmark sweeps (env MPEREG_THREADS)")->capture_default_str();
  app.add_flag("-v,--verbose", verbose, "Progress on stderr");
  app.add_flag("--omit-timings", omit_timings, "Leave wall-clock fields out of outputs (byte-reproducible files)");
  app.fallthrough();

  // register
  auto* reg = app.add_subcommand("register", "Register a template cloud onto a reference cloud");
  std::string tpl_path, ref_path, out_path, gt_path;
  MplOptions reg_opts;
  reg->add_option("--template", tpl_path, "Moving cloud (PLY/XYZ)")->required();
  reg->add_option("--reference", ref_path, "Fixed cloud (PLY/XYZ)")->required();
  reg->add_option("--out", out_path, "Registration report (JSON)")->required();
  reg->add_option("--ground-truth", gt_path, "Pose JSON mapping template onto reference; adds error metrics");
  add_mpl_options(reg, reg_opts);

  // bench-noise
  auto* noise = app.add_subcommand("bench-noise", "Registration error versus Gaussian noise");
  BenchOptions noise_b;
  MplOptions noise_opts;
  std::string sigmas = "0.01:0.15:0.01";
  add_bench_options(noise, noise_b);
  noise->add_option("--sigmas", sigmas, "Noise levels, start:stop:step or a,b,c")->capture_default_str();
  noise->add_option("--outliers", noise_b.outliers, "Outliers added in every trial")->capture_default_str();
  add_mpl_options(noise, noise_opts);

  // bench-outliers
  auto* outl = app.add_subcommand("bench-outliers", "Registration error versus uniform outliers");
  BenchOptions outl_b;
  MplOptions outl_opts;
  std::string counts;
  std::string fractions = "0:1.5:0.25";
  add_bench_options(outl, outl_b);
  outl->add_option("--counts", counts, "Outlier counts, a,b,c (overrides --fractions)");
  outl->add_option("--fractions", fractions, "Outlier counts as fractions of the cloud size")->capture_default_str();
  outl->add_option("--sigma", outl_b.sigma, "Noise added in every trial")->capture_default_str();
  add_mpl_options(outl, outl_opts);

  // bench-sampling
  auto* samp = app.add_subcommand("bench-sampling", "Error and run time versus coarse-stage sampling ratio");
  BenchOptions samp_b;
  MplOptions samp_opts;
  std::string ratios = "0.05:0.80:0.05";
  add_bench_options(samp, samp_b);
  samp->add_option("--ratios", ratios, "Sampling ratios, start:stop:step or a,b,c")->capture_default_str();
  samp->add_option("--sigma", samp_b.sigma, "Noise added in every trial")->capture_default_str();
  samp->add_option("--outliers", samp_b.outliers, "Outliers added in every trial")->capture_default_str();
  add_mpl_options(samp, samp_opts, false);

  // toy-p2
  auto* toy = app.add_subcommand("toy-p2", "Planar toy: least squares versus the P2 criterion with one outlier pair");
  double outlier_scale = 10.0;
  std::string toy_out;
  MpeConfig toy_config = p2_toy_mpe_config();
  toy->add_option("--softening", toy_config.force.softening, "Force softening epsilon for the toy")->capture_default_str();
  toy->add_option("--outlier-scale", outlier_scale, "Outlier pair length over cloud diameter (0 = none)")->capture_default_str();
  toy->add_option("--out", toy_out, "JSON output (stdout when omitted)");

  // perturb
  auto* pert = app.add_subcommand("perturb", "Write a randomly moved, noisy copy of a cloud and its ground truth");
  std::string pert_in, pert_cloud, pert_pose;
  PerturbationSpec spec;
  pert->add_option("--input", pert_in, "Source cloud (PLY/XYZ)")->required();
  pert->add_option("--out-cloud", pert_cloud, "Perturbed cloud (PLY/XYZ)")->required();
  pert->add_option("--out-pose", pert_pose, "Pose JSON mapping the output back onto the input")->required();
  pert->add_option("--rotation-max", spec.rotation_max, "Largest random rotation, radians")->capture_default_str();
  pert->add_option("--translation-max", spec.translation_max, "Largest random translation, normalized")->capture_default_str();
  pert->add_option("--sigma", spec.gaussian_sigma, "Per-axis Gaussian noise, normalized")->capture_default_str();
  pert->add_option("--outliers", spec.outlier_count, "Uniform outliers in the bounding cube")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (reg->parsed()) {
      const PointCloud tpl = read_cloud(tpl_path);
      const PointCloud ref = read_cloud(ref_path);
      const RegistrationReport report = mpl_register(tpl, ref, resolve(reg_opts, seed));
      std::optional<GroundTruthErrors> errors;
      if (!gt_path.empty()) {
        const RigidTransform gt = read_pose(gt_path);
        errors = GroundTruthErrors{rotation_error_deg(gt, report.pose),
                                   translation_error(gt.translation(), report.pose.translation())};
      }
      write_json(registration_report_to_json(report, !omit_timings, errors ? &*errors : nullptr), out_path);
      if (verbose) std::cerr << "coarse " << to_string(report.mpe_status) << " after " << report.mpe_iterations
                             << " iterations; ICP " << report.icp_iterations << " iterations\n";
    } else if (noise->parsed() || outl->parsed() || samp->parsed()) {
      SweepOptions sweep;
      sweep.seed = seed;
      sweep.threads = threads;
      const BenchOptions& b = noise->parsed() ? noise_b : outl->parsed() ? outl_b : samp_b;
      sweep.rotation_max = b.rotation_max;
      sweep.translation_max = b.translation_max;
      sweep.gaussian_sigma = b.sigma;
      sweep.outlier_count = b.outliers;
      const PointCloud ref = bench_reference(b);
      ExperimentReport report;
      if (noise->parsed()) {
        report = run_noise_sweep(ref, parse_list(sigmas), b.trials, resolve(noise_opts, seed), sweep);
      } else if (outl->parsed()) {
        std::vector<std::size_t> levels;
        if (!counts.empty()) {
          for (double v : parse_list(counts)) {
            if (v < 0.0 || v != std::floor(v)) throw UsageError("outlier counts must be non-negative integers");
            levels.push_back(static_cast<std::size_t>(v));
          }
        } else {
          for (double f : parse_list(fractions)) {
            if (f < 0.0) throw UsageError("outlier fractions must be >= 0");
            levels.push_back(static_cast<std::size_t>(std::llround(f * static_cast<double>(ref.size()))));
          }
        }
        report = run_outlier_sweep(ref, levels, b.trials, resolve(outl_opts, seed), sweep);
      } else {
        report = run_sampling_sweep(ref, parse_list(ratios), b.trials, resolve(samp_opts, seed), sweep);
      }
      write_bench(report, b, !omit_timings, verbose);
    } else if (toy->parsed()) {
      const Json j = p2_toy_to_json(run_p2_toy(seed, outlier_scale, toy_config));
      if (toy_out.empty()) {
        std::cout << j.dump(2) << '\n';
      } else {
        write_json(j, toy_out);
      }
    } else if (pert->parsed()) {
      const PointCloud src = read_cloud(pert_in);
      spec.seed = seed;
      // Perturb in normalized units, then report everything in the input's units.
      const NormalizedPair norm = normalize_clouds(src, src);
      const PerturbedCloud out = perturb(norm.reference_cloud, spec);
      write_cloud(norm.record.denormalize(out.cloud), pert_cloud);
      Json pose = pose_to_json(norm.record.denormalize(out.ground_truth.inverse()));
      pose["inlier_count"] = out.inlier_count;
      write_json(pose, pert_pose);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
