#pragma once

#include "burstlab/image.hpp"

namespace burstlab {

struct Burst;  // geometry.hpp

/// Sample an RGB image through the color filter array.
RawFrame mosaic(const ImagePlane& rgb, CfaPattern cfa);

/// Linear demosaic: per-color bilinear upsampling of the CFA site grids;
/// the two green site grids are averaged. Exact at native CFA sites.
ImagePlane extract_channels(const RawFrame& raw);

/// Stack extract_channels over the burst: 3N channels in frame order.
ImagePlane pack_burst(const Burst& burst);

/// Bayer-preserving space-to-depth: keep the top-left 2x2 quad of each
/// s x s block of quads. Output (H/s, W/s), same CFA phase.
RawFrame space_to_depth_decimate(const RawFrame& raw, int factor);

/// Per-pixel sample with mean mu and variance shot_gain*mu + read_sigma^2,
/// clamped to [0,1]; pure function of (frame, params).
RawFrame add_poisson_gaussian(const RawFrame& frame, const NoiseParams& params);

}  // namespace burstlab
