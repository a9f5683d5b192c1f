#include "burstlab/metrics.hpp"

#include <cmath>
#include <limits>

#include <json.hpp>

namespace burstlab {

double psnr(const ImagePlane& a, const ImagePlane& b, double peak,
            const Mask* mask) {
  if (!a.same_shape(b)) throw ShapeError("psnr: shape mismatch");
  if (peak <= 0.0) throw ParamError("psnr: peak must be > 0");
  if (mask && (mask->height != a.height() || mask->width != a.width()))
    throw ShapeError("psnr: mask size mismatch");

  double acc = 0.0;
  long n = 0;
  for (int r = 0; r < a.height(); ++r)
    for (int c = 0; c < a.width(); ++c) {
      if (mask && !mask->at(r, c)) continue;
      for (int ch = 0; ch < a.channels(); ++ch) {
        const double d = a.at(r, c, ch) - b.at(r, c, ch);
        acc += d * d;
        ++n;
      }
    }
  if (n == 0) throw ShapeError("psnr: empty mask");
  const double mse = acc / static_cast<double>(n);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const ImagePlane& a_in, const ImagePlane& b_in, int window,
            double k1, double k2, double peak) {
  if (!a_in.same_shape(b_in)) throw ShapeError("ssim: shape mismatch");
  const ImagePlane a = luma(a_in);
  const ImagePlane b = luma(b_in);
  if (a.height() < window || a.width() < window)
    throw DimensionError("ssim: image smaller than the window");

  // Gaussian window, sigma 1.5, truncated to the window and normalized.
  std::vector<double> weights(static_cast<std::size_t>(window) * window);
  const double center = (window - 1) / 2.0;
  double total = 0.0;
  for (int i = 0; i < window; ++i)
    for (int j = 0; j < window; ++j) {
      const double d2 = (i - center) * (i - center) + (j - center) * (j - center);
      const double w = std::exp(-d2 / (2.0 * 1.5 * 1.5));
      weights[static_cast<std::size_t>(i) * window + j] = w;
      total += w;
    }
  for (double& w : weights) w /= total;

  const double c1 = (k1 * peak) * (k1 * peak);
  const double c2 = (k2 * peak) * (k2 * peak);

  double acc = 0.0;
  long count = 0;
  for (int r = 0; r + window <= a.height(); ++r)
    for (int c = 0; c + window <= a.width(); ++c) {
      double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
      for (int i = 0; i < window; ++i)
        for (int j = 0; j < window; ++j) {
          const double w = weights[static_cast<std::size_t>(i) * window + j];
          const double va = a.at(r + i, c + j);
          const double vb = b.at(r + i, c + j);
          mu_a += w * va;
          mu_b += w * vb;
          aa += w * va * va;
          bb += w * vb * vb;
          ab += w * va * vb;
        }
      const double var_a = aa - mu_a * mu_a;
      const double var_b = bb - mu_b * mu_b;
      const double cov = ab - mu_a * mu_b;
      const double value = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
                           ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      acc += value;
      ++count;
    }
  return acc / static_cast<double>(count);
}

BandError band_error(const ImagePlane& a, const ImagePlane& b,
                     const RadialMask& mask) {
  if (!a.same_shape(b)) throw ShapeError("band_error: shape mismatch");
  if (mask.height() != a.height() || mask.width() != a.width())
    throw ShapeError("band_error: mask size mismatch");

  const ImagePlane diff = a - b;
  const ImagePlane low = project(diff, mask, ProjectionBand::kLow);
  const ImagePlane high = project(diff, mask, ProjectionBand::kHigh);

  auto mse = [](const ImagePlane& img) {
    double acc = 0.0;
    for (double v : img.data()) acc += v * v;
    return acc / static_cast<double>(img.size());
  };
  const double low_mse = mse(low);
  const double high_mse = mse(high);

  if (mask.gains.is_binary()) {
    // Disjoint binary bands tile the spectrum: Parseval forces the split.
    const double total = mse(diff);
    if (std::abs(low_mse + high_mse - total) > 1e-10)
      throw NumericError("band_error: binary-mask Parseval identity violated");
  }
  return {std::sqrt(low_mse), std::sqrt(high_mse)};
}

MetricReport metric_report(const ImagePlane& ref, const ImagePlane& test,
                           const RadialMask& mask, double peak,
                           const Mask* valid) {
  MetricReport report;
  const double p = psnr(ref, test, peak, valid);
  report.psnr_infinite = std::isinf(p);
  report.psnr = report.psnr_infinite ? kPsnrTextCap : p;
  report.ssim = ssim(ref, test);
  const BandError bands = band_error(ref, test, mask);
  report.lowband_rmse = bands.lowband_rmse;
  report.highband_rmse = bands.highband_rmse;
  report.valid_fraction = valid ? valid->true_fraction() : 1.0;
  return report;
}

std::string MetricReport::to_json() const {
  nlohmann::json j;
  j["psnr"] = psnr;
  j["psnr_infinite"] = psnr_infinite;
  j["ssim"] = ssim;
  j["lowband_rmse"] = lowband_rmse;
  j["highband_rmse"] = highband_rmse;
  j["valid_fraction"] = valid_fraction;
  return j.dump(2);
}

}  // namespace burstlab
