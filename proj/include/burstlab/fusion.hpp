#pragma once

#include "burstlab/geometry.hpp"

namespace burstlab {

struct FusionConfig {
  int sr_factor = 4;
  double kernel_sigma = 0.7;  // accumulation kernel width, HR pixels
  double min_weight = 1e-3;   // below this, a bin is a hole
  bool use_given_trajectory = false;

  void validate() const;
};

struct FusionStats {
  long holes[3] = {0, 0, 0};  // bins below min_weight, per channel
  long hole_count() const { return holes[0] + holes[1] + holes[2]; }
};

/// Kernel-regression fusion: every raw sample is splatted into the
/// s-times-resolution grid of its CFA color at its warped sub-pixel
/// location with Gaussian weights, normalized by accumulated weight.
/// Low-weight bins are holes, filled channel-wise from valid neighbors.
/// Trajectory homographies are expressed in HR pixel coordinates.
ImagePlane fuse(const Burst& burst, const Trajectory& trajectory,
                const FusionConfig& cfg, FusionStats* stats = nullptr);

struct ReconstructResult {
  ImagePlane image;
  Trajectory trajectory;       // the one actually used for splatting
  int dropped_frames = 0;      // alignment failures
};

/// align_burst (unless cfg.use_given_trajectory) followed by fuse.
ReconstructResult reconstruct(const Burst& burst, const FusionConfig& cfg,
                              const RegistrationOptions& reg = {});

/// Rescale a homography expressed in LR pixel coordinates to HR pixel
/// coordinates under the space-to-depth geometry (x_hr ~ s*x_lr + (1-s)).
Homography lr_to_hr_homography(const Homography& h_lr, int sr_factor);

}  // namespace burstlab
