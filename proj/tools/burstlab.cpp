// burstlab: burst RAW simulation, fusion, frequency-domain projection and
// score-distillation experiments from the command line.

#include <CLI11.hpp>

#include <complex>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <random>

#include "burstlab/fusion.hpp"
#include "burstlab/io.hpp"
#include "burstlab/metrics.hpp"
#include "burstlab/pipeline.hpp"
#include "burstlab/raw_sensor.hpp"
#include "burstlab/rng.hpp"
#include "burstlab/subspace.hpp"

namespace {

using namespace burstlab;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct MaskFlags {
  double alpha = 0.8;
  double beta = 0.2;
  double gamma = 4.0;
  double binary_threshold = 0.0;  // 0 disables binarization

  void attach(CLI::App* cmd, const std::string& prefix = "") {
    cmd->add_option("--" + prefix + "alpha", alpha, "mask alpha");
    cmd->add_option("--" + prefix + "beta", beta, "mask beta");
    cmd->add_option("--" + prefix + "gamma", gamma, "mask gamma");
    cmd->add_option("--" + prefix + "binary-threshold", binary_threshold,
                    "binarize the mask at this soft-gain level (0 = soft)");
  }

  RadialMask build(int h, int w) const {
    RadialMask mask = make_mask(h, w, alpha, beta, gamma);
    if (binary_threshold > 0.0) mask = binary_mask_from(mask, binary_threshold);
    return mask;
  }
};

struct SimFlags {
  int frames = 11;
  int sr = 4;
  int patch = 0;  // 0 = use the input size as-is
  double magnitude = 2.0;
  double rho = 0.9;
  std::string traj_file;
  double shot_gain = 0.01;
  double read_sigma = 0.02;
  double iso_scale = 1.0;
  bool exact_poisson = false;
  std::string cfa = "RGGB";
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--frames", frames, "burst length N");
    cmd->add_option("--sr", sr, "super-resolution factor");
    cmd->add_option("--patch", patch, "center-crop size (0 = full image)");
    cmd->add_option("--magnitude", magnitude, "tremor translation std, HR px");
    cmd->add_option("--rho", rho, "tremor AR(1) correlation");
    cmd->add_option("--traj-file", traj_file, "trajectory JSON instead of synthesis");
    cmd->add_option("--shot-gain", shot_gain, "noise variance slope a");
    cmd->add_option("--read-sigma", read_sigma, "read noise std b");
    cmd->add_option("--iso", iso_scale, "ISO-like noise scale");
    cmd->add_flag("--exact-poisson", exact_poisson, "sample true Poisson shot noise");
    cmd->add_option("--cfa", cfa, "CFA pattern (RGGB|BGGR|GRBG|GBRG)");
    cmd->add_option("--seed", seed, "simulation seed");
  }

  SimulationConfig build() const {
    SimulationConfig cfg;
    cfg.n_frames = frames;
    cfg.sr_factor = sr;
    cfg.patch = patch;
    if (traj_file.empty()) {
      TremorParams tremor;
      tremor.magnitude_px = magnitude;
      tremor.rho = rho;
      cfg.trajectory = tremor;
    } else {
      cfg.trajectory = std::filesystem::path(traj_file);
    }
    cfg.noise.shot_gain = shot_gain;
    cfg.noise.read_sigma = read_sigma;
    cfg.noise.iso_scale = iso_scale;
    cfg.noise.exact_poisson = exact_poisson;
    cfg.cfa = cfa_from_string(cfa);
    cfg.seed = seed;
    return cfg;
  }
};

ImagePlane center_crop(const ImagePlane& img, int patch) {
  if (patch <= 0 || (img.height() == patch && img.width() == patch)) return img;
  if (img.height() < patch || img.width() < patch)
    throw DimensionError("input smaller than requested patch");
  ImagePlane out(patch, patch, img.channels());
  const int r0 = (img.height() - patch) / 2;
  const int c0 = (img.width() - patch) / 2;
  for (int ch = 0; ch < img.channels(); ++ch)
    for (int r = 0; r < patch; ++r)
      for (int c = 0; c < patch; ++c)
        out.at(r, c, ch) = img.at(r0 + r, c0 + c, ch);
  return out;
}

ImagePlane ensure_rgb(ImagePlane img) {
  if (img.channels() == 3) return img;
  if (img.channels() != 1) throw ShapeError("expected 1 or 3 channels");
  ImagePlane rgb(img.height(), img.width(), 3);
  for (int ch = 0; ch < 3; ++ch) rgb.set_channel(ch, img);
  return rgb;
}

void save_by_extension(const ImagePlane& img, const std::filesystem::path& path) {
  if (path.extension() == ".png")
    save_png(img, path);
  else
    save_pfm(img, path);
}

BccbOperator parse_kernel(const std::string& spec, int grid, int decimate) {
  if (spec == "identity") return BccbOperator::identity(grid, decimate);
  if (spec == "havg") return BccbOperator::horizontal_average(grid, decimate);
  if (spec == "box3")
    return BccbOperator::from_stencil(
        grid, {{1 / 9., 1 / 9., 1 / 9.}, {1 / 9., 1 / 9., 1 / 9.}, {1 / 9., 1 / 9., 1 / 9.}},
        decimate);
  if (spec.rfind("gaussian:", 0) == 0)
    return BccbOperator::gaussian(grid, std::stod(spec.substr(9)), decimate);
  throw ParamError("unknown kernel spec: " + spec +
                   " (use identity|havg|box3|gaussian:<sigma>)");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out << text;
}

int run(int argc, char** argv) {
  CLI::App app{"burst RAW super-resolution lab"};
  app.set_config("--config")->configurable(false);
  app.require_subcommand(1);

  // ---- simulate ----------------------------------------------------------
  auto* sim_cmd = app.add_subcommand("simulate", "synthesize a paired burst")
                      ->configurable();
  std::string sim_in, sim_out;
  SimFlags sim_flags;
  sim_cmd->add_option("input", sim_in, "HR image (.pfm/.png)")->required();
  sim_cmd->add_option("output", sim_out, "output burst directory")->required();
  sim_flags.attach(sim_cmd);
  sim_cmd->callback([&] {
    ImagePlane gt = ensure_rgb(load_image(sim_in));
    gt = center_crop(gt, sim_flags.patch);
    SimulationConfig cfg = sim_flags.build();
    cfg.patch = gt.height();
    PairedSample sample = simulate_pair(gt, cfg);
    save_burst(sample.burst, sim_out);
    save_pfm(sample.gt, std::filesystem::path(sim_out) / "gt.pfm");
    std::cerr << "simulate: wrote " << sample.burst.size() << " frames ("
              << sample.burst.frames[0].height << "x"
              << sample.burst.frames[0].width << ") to " << sim_out << "\n";
  });

  // ---- fuse --------------------------------------------------------------
  auto* fuse_cmd = app.add_subcommand("fuse", "multi-frame fusion baseline")
                       ->configurable();
  std::string fuse_in, fuse_out;
  FusionConfig fuse_cfg;
  bool oracle_alignment = false;
  fuse_cmd->add_option("burst_dir", fuse_in, "burst directory")->required();
  fuse_cmd->add_option("output", fuse_out, "output image (.pfm/.png)")->required();
  fuse_cmd->add_option("--sr", fuse_cfg.sr_factor, "super-resolution factor");
  fuse_cmd->add_option("--kernel-sigma", fuse_cfg.kernel_sigma,
                       "splat kernel width, HR px");
  fuse_cmd->add_option("--min-weight", fuse_cfg.min_weight, "hole threshold");
  fuse_cmd->add_flag("--oracle-alignment", oracle_alignment,
                     "use the stored trajectory instead of estimating");
  fuse_cmd->callback([&] {
    Burst burst = load_burst(fuse_in);
    fuse_cfg.use_given_trajectory = oracle_alignment;
    ReconstructResult result = reconstruct(burst, fuse_cfg);
    save_by_extension(result.image, fuse_out);
    std::cerr << "fuse: " << burst.size() - result.dropped_frames << "/"
              << burst.size() << " frames -> " << fuse_out << "\n";
  });

  // ---- project -----------------------------------------------------------
  auto* proj_cmd =
      app.add_subcommand("project", "frequency-domain band projection")
          ->configurable();
  std::string proj_in, proj_out, proj_mode = "high", proj_mask_out;
  MaskFlags proj_mask;
  proj_cmd->add_option("input", proj_in, "input image (.pfm)")->required();
  proj_cmd->add_option("output", proj_out, "output image (.pfm/.png)")->required();
  proj_mask.attach(proj_cmd);
  proj_cmd->add_option("--mode", proj_mode, "high|low");
  proj_cmd->add_option("--export-mask", proj_mask_out, "write mask gains as PFM");
  proj_cmd->callback([&] {
    ImagePlane img = load_image(proj_in);
    RadialMask mask = proj_mask.build(img.height(), img.width());
    ProjectionBand band;
    if (proj_mode == "high")
      band = ProjectionBand::kHigh;
    else if (proj_mode == "low")
      band = ProjectionBand::kLow;
    else
      throw ParamError("project: --mode must be high or low");
    save_by_extension(project(img, mask, band), proj_out);
    if (!proj_mask_out.empty())
      save_pfm(gains_as_image(mask.gains), proj_mask_out);
  });

  // ---- spectrum ----------------------------------------------------------
  auto* spec_cmd = app.add_subcommand("spectrum", "log-magnitude spectrum")
                       ->configurable();
  std::string spec_in, spec_out;
  spec_cmd->add_option("input", spec_in, "input image (.pfm/.png)")->required();
  spec_cmd->add_option("output", spec_out, "output image (.pfm/.png)")->required();
  spec_cmd->callback([&] {
    ImagePlane img = load_image(spec_in);
    if (img.channels() != 1) img = luma(img);
    save_by_extension(log_spectrum(img), spec_out);
  });

  // ---- distill -----------------------------------------------------------
  auto* dist_cmd =
      app.add_subcommand("distill", "toy score-distillation optimization")
          ->configurable();
  std::string dist_target, dist_mode = "hf", dist_trace = "trace.csv";
  std::string dist_prior_mean, dist_reference, dist_dump_prefix, dist_omega = "const";
  std::string dist_init = "target";
  double dist_dc_shift = 0.0, dist_prior_var = 0.0;
  MaskFlags dist_mask;
  DistillConfig dist_cfg;
  dist_cmd->add_option("target", dist_target, "data target (.pfm)")->required();
  dist_mask.attach(dist_cmd);
  dist_cmd->add_option("--mode", dist_mode, "naive|hf|data");
  dist_cmd->add_option("--lambda", dist_cfg.lambda, "regularization weight");
  dist_cmd->add_option("--steps", dist_cfg.steps, "optimizer iterations");
  dist_cmd->add_option("--lr", dist_cfg.lr, "step size");
  dist_cmd->add_option("--t-min", dist_cfg.t_min, "timestep lower bound");
  dist_cmd->add_option("--t-max", dist_cfg.t_max, "timestep upper bound");
  dist_cmd->add_option("--seed", dist_cfg.seed, "sampling seed");
  dist_cmd->add_option("--omega", dist_omega, "const|adaptive");
  dist_cmd->add_option("--init", dist_init, "target|zeros");
  dist_cmd->add_option("--prior-mean", dist_prior_mean,
                       "prior mean image (.pfm), default = target");
  dist_cmd->add_option("--prior-dc-shift", dist_dc_shift,
                       "constant added to the prior mean");
  dist_cmd->add_option("--prior-var", dist_prior_var,
                       "constant spectral variance of the prior");
  dist_cmd->add_option("--reference", dist_reference,
                       "ground truth for the low-band trace column");
  dist_cmd->add_option("--out", dist_trace, "trace CSV path");
  dist_cmd->add_option("--dump-prefix", dist_dump_prefix,
                       "write <prefix>_initial.pfm and <prefix>_final.pfm");
  dist_cmd->callback([&] {
    const ImagePlane target = load_pfm(dist_target);
    StationaryGaussianPrior prior;
    prior.mean = dist_prior_mean.empty() ? target : load_pfm(dist_prior_mean);
    for (double& v : prior.mean.data()) v += dist_dc_shift;
    prior.spectral_variance =
        GainGrid(target.height(), target.width(), dist_prior_var);

    dist_cfg.mask = dist_mask.build(target.height(), target.width());
    if (dist_mode == "hf")
      dist_cfg.mode = DistillMode::kHfVsd;
    else if (dist_mode == "naive")
      dist_cfg.mode = DistillMode::kNaiveVsd;
    else if (dist_mode == "data")
      dist_cfg.mode = DistillMode::kDataOnly;
    else
      throw ParamError("distill: --mode must be naive|hf|data");
    dist_cfg.omega_rule = (dist_omega == "adaptive") ? OmegaRule::kAdaptive
                                                     : OmegaRule::kConstantOne;
    dist_cfg.init =
        (dist_init == "zeros") ? DistillInit::kZeros : DistillInit::kTarget;
    if (!dist_reference.empty()) dist_cfg.reference = load_pfm(dist_reference);

    if (!dist_dump_prefix.empty()) {
      const ImagePlane initial =
          dist_cfg.init == DistillInit::kTarget
              ? target
              : ImagePlane(target.height(), target.width(), target.channels());
      save_pfm(initial, dist_dump_prefix + "_initial.pfm");
    }
    const DistillState state = run_distillation(target, prior, dist_cfg);

    std::ostringstream csv;
    csv.precision(17);
    csv << "iter,data_loss,reg_norm,lowband_err,highband_energy\n";
    for (const DistillTraceRow& row : state.trace)
      csv << row.iter << "," << row.data_loss << "," << row.reg_norm << ","
          << row.lowband_err << "," << row.highband_energy << "\n";
    write_text(dist_trace, csv.str());
    if (!dist_dump_prefix.empty())
      save_pfm(state.x_hat, dist_dump_prefix + "_final.pfm");
    std::cerr << "distill: " << state.iteration << " steps, final data loss "
              << state.trace.back().data_loss << "\n";
  });

  // ---- verify-nullspace ----------------------------------------------------
  auto* null_cmd =
      app.add_subcommand("verify-nullspace",
                         "BCCB null-space oracle and mask fidelity report")
          ->configurable();
  int null_n = 8, null_decimate = 1, null_vectors = 100;
  std::string null_kernel = "gaussian:1.2", null_report = "nullspace.json";
  std::uint64_t null_seed = 0;
  MaskFlags null_mask;
  null_cmd->add_option("--n", null_n, "grid size (dense path caps at 32)");
  null_cmd->add_option("--kernel", null_kernel,
                       "identity|havg|box3|gaussian:<sigma>");
  null_cmd->add_option("--decimate", null_decimate, "decimation stride");
  null_cmd->add_option("--vectors", null_vectors, "random probe vectors");
  null_cmd->add_option("--seed", null_seed, "probe seed");
  null_mask.attach(null_cmd);
  null_cmd->add_option("--report", null_report, "output JSON path");
  null_cmd->callback([&] {
    const BccbOperator op = parse_kernel(null_kernel, null_n, null_decimate);
    const Eigen::MatrixXd p_l = range_projector(op);
    const Eigen::MatrixXd p_h = null_projector(op);
    const long dim = p_l.rows();

    nlohmann::json j;
    j["grid"] = null_n;
    j["decimation"] = null_decimate;
    j["kernel"] = null_kernel;
    j["range_rank"] = static_cast<long>(std::lround(p_l.trace()));
    j["symmetry_error"] = (p_l - p_l.transpose()).cwiseAbs().maxCoeff();
    j["idempotence_error"] = (p_l * p_l - p_l).cwiseAbs().maxCoeff();
    j["complement_error"] =
        (p_l + p_h - Eigen::MatrixXd::Identity(dim, dim)).cwiseAbs().maxCoeff();
    j["forward_annihilation"] = (op.dense() * p_h).cwiseAbs().maxCoeff();

    if (null_decimate == 1) {
      const GainGrid gains = fourier_null_projector(op);
      auto rng = make_rng(null_seed);
      std::normal_distribution<double> normal(0.0, 1.0);
      double worst = 0.0;
      for (int k = 0; k < null_vectors; ++k) {
        ImagePlane x(null_n, null_n, 1);
        for (double& v : x.data()) v = normal(rng);
        const ImagePlane via_fourier = project(x, gains, ProjectionBand::kHigh);
        Eigen::VectorXd xe(dim);
        for (long i = 0; i < dim; ++i) xe(i) = x.data()[static_cast<std::size_t>(i)];
        const Eigen::VectorXd via_dense = p_h * xe;
        double num = 0.0, den = 0.0;
        for (long i = 0; i < dim; ++i) {
          const double d = via_fourier.data()[static_cast<std::size_t>(i)] - via_dense(i);
          num += d * d;
          den += xe(i) * xe(i);
        }
        worst = std::max(worst, std::sqrt(num / den));
      }
      j["fourier_vs_dense_max_rel"] = worst;
    } else {
      j["fourier_vs_dense_max_rel"] = nullptr;
      j["fourier_path"] = "unsupported for decimated operators; dense oracle only";
    }

    const RadialMask mask = make_mask(null_n, null_n, null_mask.alpha,
                                      null_mask.beta, null_mask.gamma);
    j["mask_fidelity"] = nlohmann::json::parse(mask_fidelity_report(op, mask).to_json());
    write_text(null_report, j.dump(2) + "\n");
    std::cerr << "verify-nullspace: report written to " << null_report << "\n";
  });

  // ---- metrics -------------------------------------------------------------
  auto* met_cmd = app.add_subcommand("metrics", "PSNR / SSIM / band errors")
                      ->configurable();
  std::string met_ref, met_test, met_json = "metrics.json";
  double met_border = 0.0;
  MaskFlags met_mask;
  met_cmd->add_option("reference", met_ref, "reference image (.pfm)")->required();
  met_cmd->add_option("test", met_test, "test image (.pfm)")->required();
  met_mask.alpha = 0.8;
  met_cmd->add_option("--mask-alpha", met_mask.alpha, "band-split mask alpha");
  met_cmd->add_option("--mask-beta", met_mask.beta, "band-split mask beta");
  met_cmd->add_option("--mask-gamma", met_mask.gamma, "band-split mask gamma");
  met_cmd->add_option("--border", met_border, "exclude this many border pixels");
  met_cmd->add_option("--json", met_json, "output report path");
  met_cmd->callback([&] {
    const ImagePlane ref = load_image(met_ref);
    const ImagePlane test = load_image(met_test);
    const RadialMask mask =
        make_mask(ref.height(), ref.width(), met_mask.alpha, met_mask.beta,
                  met_mask.gamma);
    Mask valid(ref.height(), ref.width(), true);
    const int b = static_cast<int>(met_border);
    for (int r = 0; r < ref.height(); ++r)
      for (int c = 0; c < ref.width(); ++c)
        if (r < b || c < b || r >= ref.height() - b || c >= ref.width() - b)
          valid.set(r, c, false);
    const MetricReport report = metric_report(ref, test, mask, 1.0, &valid);
    write_text(met_json, report.to_json() + "\n");
    std::fprintf(stderr, "metrics: psnr %.2f dB%s  ssim %.4f  low %.3e  high %.3e\n",
                 report.psnr, report.psnr_infinite ? " (inf)" : "", report.ssim,
                 report.lowband_rmse, report.highband_rmse);
  });

  // ---- ablate-hf -----------------------------------------------------------
  auto* abl_cmd =
      app.add_subcommand("ablate-hf", "three-mode low-band suppression study")
          ->configurable();
  std::string abl_scene, abl_json = "ablation.json", abl_csv = "ablation.csv";
  SimFlags abl_sim;
  abl_sim.frames = 4;
  abl_sim.sr = 2;
  abl_sim.shot_gain = 0.0;
  abl_sim.read_sigma = 0.0;
  MaskFlags abl_mask;
  abl_mask.binary_threshold = 0.5;
  DistillConfig abl_dist;
  abl_dist.steps = 3000;
  abl_dist.lr = 0.002;
  AblationOptions abl_opts;
  abl_cmd->add_option("scene", abl_scene, "HR scene (.pfm/.png)")->required();
  abl_sim.attach(abl_cmd);
  abl_mask.attach(abl_cmd);
  abl_cmd->add_option("--lambda", abl_dist.lambda, "regularization weight");
  abl_cmd->add_option("--steps", abl_dist.steps, "optimizer iterations");
  abl_cmd->add_option("--lr", abl_dist.lr, "step size");
  abl_cmd->add_option("--distill-seed", abl_dist.seed, "distillation seed");
  abl_cmd->add_option("--dc-shift", abl_opts.prior_dc_shift,
                      "prior mean DC offset (the domain collision)");
  abl_cmd->add_option("--epsilon", abl_opts.ordering_epsilon,
                      "tolerance in the low-band ordering check");
  abl_cmd->add_option("--json", abl_json, "output JSON path");
  abl_cmd->add_option("--csv", abl_csv, "output CSV path");
  abl_cmd->callback([&] {
    ImagePlane scene = ensure_rgb(load_image(abl_scene));
    scene = center_crop(scene, abl_sim.patch);
    SimulationConfig cfg = abl_sim.build();
    cfg.patch = scene.height();
    abl_dist.mask = make_mask(scene.height(), scene.width(), abl_mask.alpha,
                              abl_mask.beta, abl_mask.gamma);
    abl_opts.mask_binary_threshold =
        abl_mask.binary_threshold > 0 ? abl_mask.binary_threshold : 0.5;
    const AblationReport report = run_ablation_hf(scene, cfg, abl_dist, abl_opts);
    write_text(abl_json, report.to_json() + "\n");
    write_text(abl_csv, report.to_csv());
    std::cerr << "ablate-hf: ordering "
              << (report.ordering_holds ? "holds" : "VIOLATED") << " (low-band "
              << report.hf_vsd.lowband_rmse << " / "
              << report.data_only.lowband_rmse << " / "
              << report.naive_vsd.lowband_rmse << " for hf/data/naive)\n";
  });

  // ---- dataset ---------------------------------------------------------------
  auto* ds_cmd = app.add_subcommand("dataset", "batch paired-sample generation")
                     ->configurable();
  std::string ds_src, ds_out, ds_manifest;
  SimFlags ds_sim;
  ds_sim.patch = 256;
  double ds_train = 0.90, ds_val = 0.05, ds_test = 0.05;
  ds_cmd->add_option("src_dir", ds_src, "directory of HR images")->required();
  ds_cmd->add_option("out_dir", ds_out, "output dataset directory")->required();
  ds_sim.attach(ds_cmd);
  ds_cmd->add_option("--train-ratio", ds_train, "train split ratio");
  ds_cmd->add_option("--val-ratio", ds_val, "val split ratio");
  ds_cmd->add_option("--test-ratio", ds_test, "test split ratio");
  ds_cmd->add_option("--manifest", ds_manifest,
                     "manifest path (default <out_dir>/manifest.json)");
  ds_cmd->callback([&] {
    SimulationConfig cfg = ds_sim.build();
    cfg.patch = ds_sim.patch > 0 ? ds_sim.patch : 256;
    const Manifest manifest =
        dataset_batch(ds_src, ds_out, cfg, {ds_train, ds_val, ds_test});
    const std::filesystem::path manifest_path =
        ds_manifest.empty() ? std::filesystem::path(ds_out) / "manifest.json"
                            : std::filesystem::path(ds_manifest);
    write_text(manifest_path, manifest.to_json() + "\n");
    std::cerr << "dataset: " << manifest.entries.size() << " samples, "
              << manifest.warnings.size() << " warnings\n";
    if (manifest.entries.empty()) throw FormatError("dataset: no usable inputs");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the parse error
    return code == 0 ? kExitOk : kExitConfig;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ParamError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "numerical divergence: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const NumericError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
