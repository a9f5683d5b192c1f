#pragma once

#include <optional>
#include <string>

#include "burstlab/geometry.hpp"
#include "burstlab/spectral.hpp"

namespace burstlab {

struct MetricReport {
  double psnr = 0.0;              // capped value; see psnr_infinite
  bool psnr_infinite = false;
  double ssim = 0.0;
  double lowband_rmse = 0.0;
  double highband_rmse = 0.0;
  double valid_fraction = 1.0;
  std::string to_json() const;
};

/// Cap used when rendering an infinite PSNR in text/JSON output.
inline constexpr double kPsnrTextCap = 99.0;

/// 10*log10(peak^2 / MSE) over mask-true pixels (all pixels when no mask).
/// Identical inputs return +infinity.
double psnr(const ImagePlane& a, const ImagePlane& b, double peak = 1.0,
            const Mask* mask = nullptr);

/// Mean local SSIM, Gaussian window (sigma 1.5) of the given size.
/// Multi-channel inputs are luma-reduced.
double ssim(const ImagePlane& a, const ImagePlane& b, int window = 8,
            double k1 = 0.01, double k2 = 0.03, double peak = 1.0);

struct BandError {
  double lowband_rmse = 0.0;
  double highband_rmse = 0.0;
};

/// RMSE of the low/high projections of a - b. For binary masks the two
/// bands tile the spectrum, and low^2 + high^2 = total MSE is asserted.
BandError band_error(const ImagePlane& a, const ImagePlane& b,
                     const RadialMask& mask);

MetricReport metric_report(const ImagePlane& ref, const ImagePlane& test,
                           const RadialMask& mask, double peak = 1.0,
                           const Mask* valid = nullptr);

}  // namespace burstlab
