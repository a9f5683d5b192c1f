#include "burstlab/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <sstream>

#include "burstlab/metrics.hpp"
#include "burstlab/raw_sensor.hpp"
#include "burstlab/rng.hpp"

namespace burstlab {

void SimulationConfig::validate() const {
  if (n_frames < 1) throw ParamError("simulate: n_frames must be >= 1");
  if (sr_factor < 1) throw ParamError("simulate: sr_factor must be >= 1");
  if (patch % (2 * sr_factor) != 0)
    throw ParamError("simulate: patch must be divisible by 2*sr_factor");
  noise.validate();
}

PairedSample simulate_pair(const ImagePlane& gt, const SimulationConfig& cfg) {
  cfg.validate();
  if (gt.channels() != 3) throw ShapeError("simulate_pair: gt must be RGB");
  if (gt.height() % (2 * cfg.sr_factor) != 0 ||
      gt.width() % (2 * cfg.sr_factor) != 0)
    throw DimensionError("simulate_pair: gt dimensions not divisible by 2*sr");

  Trajectory trajectory;
  if (std::holds_alternative<TremorParams>(cfg.trajectory)) {
    trajectory = synth_trajectory(cfg.n_frames,
                                  std::get<TremorParams>(cfg.trajectory),
                                  derive_seed(cfg.seed, 0x7261));
  } else {
    trajectory = load_trajectory(std::get<std::filesystem::path>(cfg.trajectory));
    if (trajectory.size() != cfg.n_frames)
      throw FormatError("simulate_pair: trajectory length != n_frames");
  }

  PairedSample sample;
  sample.gt = gt;
  sample.config = cfg;
  sample.burst.trajectory = trajectory;

  long invalid_total = 0;
  for (int i = 0; i < cfg.n_frames; ++i) {
    ImagePlane view;
    if (i == 0 || trajectory.frames[i].is_identity()) {
      view = gt;  // reference frame: no resampling at all
    } else {
      WarpResult warped = warp(gt, trajectory.frames[i]);
      invalid_total += static_cast<long>(
          std::llround((1.0 - warped.validity.true_fraction()) *
                       warped.validity.height * warped.validity.width));
      view = std::move(warped.image);
    }
    RawFrame raw = mosaic(view, cfg.cfa);
    raw = space_to_depth_decimate(raw, cfg.sr_factor);
    NoiseParams frame_noise = cfg.noise;
    frame_noise.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i) + 1);
    raw = add_poisson_gaussian(raw, frame_noise);
    sample.burst.frames.push_back(std::move(raw));
  }
  sample.burst.meta["invalid_warp_pixels"] = std::to_string(invalid_total);
  sample.burst.meta["sr_factor"] = std::to_string(cfg.sr_factor);
  sample.burst.meta["seed"] = std::to_string(cfg.seed);
  return sample;
}

AblationReport run_ablation_hf(const ImagePlane& scene,
                               const SimulationConfig& cfg,
                               const DistillConfig& distill_cfg,
                               const AblationOptions& opts) {
  PairedSample sample = simulate_pair(scene, cfg);

  FusionConfig fusion_cfg = opts.fusion;
  fusion_cfg.sr_factor = cfg.sr_factor;
  fusion_cfg.use_given_trajectory = true;
  const ImagePlane fused = reconstruct(sample.burst, fusion_cfg).image;

  // Low-band-zero binary mask from the configured soft mask.
  RadialMask soft = distill_cfg.mask;
  if (soft.height() != scene.height() || soft.width() != scene.width())
    soft = make_mask(scene.height(), scene.width(), soft.alpha, soft.beta,
                     soft.gamma, soft.extent);
  const RadialMask binary = binary_mask_from(soft, opts.mask_binary_threshold);

  StationaryGaussianPrior prior;
  prior.mean = scene;
  for (double& v : prior.mean.data()) v += opts.prior_dc_shift;
  prior.spectral_variance = GainGrid(scene.height(), scene.width(), 0.0);

  DistillConfig run_cfg = distill_cfg;
  run_cfg.mask = binary;
  run_cfg.reference = scene;

  AblationReport report;
  report.ordering_epsilon = opts.ordering_epsilon;
  auto run_mode = [&](DistillMode mode) {
    DistillConfig mode_cfg = run_cfg;
    mode_cfg.mode = mode;
    const DistillState state = run_distillation(fused, prior, mode_cfg);
    AblationReport::ModeResult result;
    const BandError bands = band_error(state.x_hat, scene, binary);
    result.lowband_rmse = bands.lowband_rmse;
    result.highband_rmse = bands.highband_rmse;
    result.final_data_loss = state.trace.back().data_loss;
    return result;
  };
  report.data_only = run_mode(DistillMode::kDataOnly);
  report.naive_vsd = run_mode(DistillMode::kNaiveVsd);
  report.hf_vsd = run_mode(DistillMode::kHfVsd);
  report.fused_lowband_rmse = band_error(fused, scene, binary).lowband_rmse;
  report.ordering_holds =
      report.hf_vsd.lowband_rmse <=
          report.data_only.lowband_rmse + opts.ordering_epsilon &&
      report.data_only.lowband_rmse + opts.ordering_epsilon <
          report.naive_vsd.lowband_rmse;
  return report;
}

std::string AblationReport::to_json() const {
  nlohmann::json j;
  auto mode = [](const ModeResult& m) {
    return nlohmann::json{{"lowband_rmse", m.lowband_rmse},
                          {"highband_rmse", m.highband_rmse},
                          {"final_data_loss", m.final_data_loss}};
  };
  j["data_only"] = mode(data_only);
  j["naive_vsd"] = mode(naive_vsd);
  j["hf_vsd"] = mode(hf_vsd);
  j["fused_lowband_rmse"] = fused_lowband_rmse;
  j["ordering_holds"] = ordering_holds;
  j["ordering_epsilon"] = ordering_epsilon;
  return j.dump(2);
}

std::string AblationReport::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "mode,lowband_rmse,highband_rmse,final_data_loss\n";
  auto row = [&](const char* name, const ModeResult& m) {
    out << name << "," << m.lowband_rmse << "," << m.highband_rmse << ","
        << m.final_data_loss << "\n";
  };
  row("data_only", data_only);
  row("naive_vsd", naive_vsd);
  row("hf_vsd", hf_vsd);
  return out.str();
}

Manifest dataset_batch(const std::filesystem::path& src_dir,
                       const std::filesystem::path& out_dir,
                       const SimulationConfig& cfg, const SplitRatios& ratios) {
  cfg.validate();
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
    throw ParamError("dataset_batch: split ratios must sum to 1");
  if (!std::filesystem::is_directory(src_dir))
    throw FormatError("dataset_batch: not a directory: " + src_dir.string());

  std::vector<std::filesystem::path> sources;
  for (const auto& entry : std::filesystem::directory_iterator(src_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".pfm" || ext == ".png") sources.push_back(entry.path());
  }
  std::sort(sources.begin(), sources.end());

  Manifest manifest;
  {
    nlohmann::json snapshot;
    snapshot["n_frames"] = cfg.n_frames;
    snapshot["sr_factor"] = cfg.sr_factor;
    snapshot["patch"] = cfg.patch;
    snapshot["cfa"] = to_string(cfg.cfa);
    snapshot["seed"] = cfg.seed;
    snapshot["noise"] = {{"shot_gain", cfg.noise.shot_gain},
                         {"read_sigma", cfg.noise.read_sigma},
                         {"iso_scale", cfg.noise.iso_scale},
                         {"exact_poisson", cfg.noise.exact_poisson}};
    snapshot["split"] = {{"train", ratios.train},
                         {"val", ratios.val},
                         {"test", ratios.test}};
    manifest.config_json = snapshot.dump();
  }

  // Simulate every readable source first; split assignment happens over
  // the successful ones so ratios stay honest when inputs are skipped.
  struct Generated {
    std::string name;
    std::filesystem::path dir;
  };
  std::vector<Generated> generated;
  std::filesystem::create_directories(out_dir);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& src = sources[i];
    try {
      ImagePlane gt = load_image(src);
      if (gt.channels() == 1) {
        ImagePlane rgb(gt.height(), gt.width(), 3);
        for (int ch = 0; ch < 3; ++ch) rgb.set_channel(ch, gt);
        gt = std::move(rgb);
      }
      if (gt.height() < cfg.patch || gt.width() < cfg.patch)
        throw DimensionError("source smaller than patch size");
      // centered crop to the configured patch
      ImagePlane crop(cfg.patch, cfg.patch, 3);
      const int r0 = (gt.height() - cfg.patch) / 2;
      const int c0 = (gt.width() - cfg.patch) / 2;
      for (int ch = 0; ch < 3; ++ch)
        for (int r = 0; r < cfg.patch; ++r)
          for (int c = 0; c < cfg.patch; ++c)
            crop.at(r, c, ch) = gt.at(r0 + r, c0 + c, ch);

      SimulationConfig scene_cfg = cfg;
      scene_cfg.seed = derive_seed(cfg.seed, i);
      PairedSample sample = simulate_pair(crop, scene_cfg);

      const std::string name = src.stem().string();
      const std::filesystem::path sample_dir = out_dir / name;
      save_burst(sample.burst, sample_dir);
      save_pfm(sample.gt, sample_dir / "gt.pfm");
      // Manifest paths are relative to out_dir so the dataset is relocatable
      // and regeneration is byte-reproducible.
      generated.push_back({name, name});
    } catch (const Error& e) {
      manifest.warnings.push_back(src.filename().string() + ": " + e.what());
    }
  }

  // Seeded shuffle, then floor counts with the remainder going to train.
  std::vector<std::size_t> order(generated.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto rng = make_rng(derive_seed(cfg.seed, 0x5350114));
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t n = generated.size();
  const std::size_t n_val = static_cast<std::size_t>(ratios.val * n);
  const std::size_t n_test = static_cast<std::size_t>(ratios.test * n);
  std::vector<std::string> split(n, "train");
  for (std::size_t k = 0; k < n_val && k < n; ++k) split[order[k]] = "val";
  for (std::size_t k = n_val; k < n_val + n_test && k < n; ++k)
    split[order[k]] = "test";

  for (std::size_t i = 0; i < n; ++i)
    manifest.entries.push_back(
        {generated[i].name, generated[i].dir.generic_string(), split[i]});
  return manifest;
}

std::string Manifest::to_json() const {
  nlohmann::json j;
  j["config"] = nlohmann::json::parse(config_json.empty() ? "{}" : config_json);
  nlohmann::json je = nlohmann::json::array();
  for (const auto& e : entries)
    je.push_back({{"name", e.name}, {"dir", e.directory}, {"split", e.split}});
  j["entries"] = je;
  j["warnings"] = warnings;
  return j.dump(2);
}

}  // namespace burstlab
