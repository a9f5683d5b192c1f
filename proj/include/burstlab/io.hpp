#pragma once

#include <filesystem>
#include <string>

#include "burstlab/geometry.hpp"
#include "burstlab/image.hpp"

namespace burstlab {

/// 16-bit binary PGM (big-endian samples), values scaled by 2^bit_depth - 1,
/// plus a JSON sidecar `<name>.json` with {cfa, bit_depth, white_level}.
void save_raw_frame(const RawFrame& frame, const std::filesystem::path& path);
RawFrame load_raw_frame(const std::filesystem::path& path);

/// PFM: "Pf" (1 channel) or "PF" (3 channels), scale header -1.0
/// (little-endian), rows stored bottom-to-top.
void save_pfm(const ImagePlane& img, const std::filesystem::path& path);
ImagePlane load_pfm(const std::filesystem::path& path);

/// 8-bit PNG export for viewing; gamma 1/2.2 applied at export only.
void save_png(const ImagePlane& img, const std::filesystem::path& path,
              double display_gamma = 2.2);
/// PNG import; gamma 2.2 applied to linearize.
ImagePlane load_png(const std::filesystem::path& path,
                    double display_gamma = 2.2);

/// Any supported image by extension (.pfm / .png).
ImagePlane load_image(const std::filesystem::path& path);

/// Burst directory: frame_000.pgm ... plus trajectory.json and burst.json.
void save_burst(const Burst& burst, const std::filesystem::path& dir);
Burst load_burst(const std::filesystem::path& dir);

}  // namespace burstlab
