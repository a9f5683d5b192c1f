#pragma once

#include <optional>
#include <variant>

#include "burstlab/fusion.hpp"
#include "burstlab/io.hpp"
#include "burstlab/score_distill.hpp"

namespace burstlab {

/// Where the motion comes from: synthesized tremor or a trajectory file.
using TrajectorySource = std::variant<TremorParams, std::filesystem::path>;

struct SimulationConfig {
  int n_frames = 11;
  int sr_factor = 4;
  int patch = 256;
  TrajectorySource trajectory = TremorParams{};
  NoiseParams noise;
  CfaPattern cfa = CfaPattern::kRggb;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PairedSample {
  ImagePlane gt;  // HR linear RGB
  Burst burst;    // LR noisy Bayer frames
  SimulationConfig config;
};

/// For each frame: warp gt by trajectory[i] (frame 0 identity), mosaic,
/// space-to-depth decimate by sr_factor, add noise with a frame-derived
/// seed. Deterministic given the config seed.
PairedSample simulate_pair(const ImagePlane& gt, const SimulationConfig& cfg);

struct AblationOptions {
  double prior_dc_shift = 0.3;    // added to every prior-mean pixel
  double ordering_epsilon = 1e-8;
  double mask_binary_threshold = 0.5;  // binarize the distill mask at this level
  FusionConfig fusion;
};

struct AblationReport {
  struct ModeResult {
    double lowband_rmse = 0.0;
    double highband_rmse = 0.0;
    double final_data_loss = 0.0;
  };
  ModeResult data_only, naive_vsd, hf_vsd;
  double fused_lowband_rmse = 0.0;  // data target vs gt, for reference
  bool ordering_holds = false;      // hf <= data + eps < naive
  double ordering_epsilon = 0.0;
  std::string to_json() const;
  std::string to_csv() const;
};

/// Toy-scale ablation: simulate a burst from the scene, fuse it, use the
/// fused image as the distillation data target, run all three modes with a
/// DC-shifted prior, and compare band errors against the scene.
AblationReport run_ablation_hf(const ImagePlane& scene,
                               const SimulationConfig& cfg,
                               const DistillConfig& distill_cfg,
                               const AblationOptions& opts = {});

struct SplitRatios {
  double train = 0.90;
  double val = 0.05;
  double test = 0.05;
};

struct ManifestEntry {
  std::string name;
  std::string directory;  // relative to the dataset root
  std::string split;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> warnings;
  std::string config_json;
  std::string to_json() const;
};

/// Simulate a PairedSample directory per readable HR image in src_dir;
/// split assignment by seeded shuffle, floor counts with the remainder
/// going to train. Unreadable inputs are skipped with a warning.
Manifest dataset_batch(const std::filesystem::path& src_dir,
                       const std::filesystem::path& out_dir,
                       const SimulationConfig& cfg,
                       const SplitRatios& ratios = {});

}  // namespace burstlab
