#include "burstlab/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace burstlab {

namespace {

// FFTW planning is not thread-safe; execution via fftw_execute_dft is.
// Plans are created with FFTW_UNALIGNED so they can run on any buffer.
class PlanCache {
 public:
  static fftw_plan get(int h, int w, int sign) {
    static PlanCache cache;
    std::lock_guard<std::mutex> lock(cache.mutex_);
    auto key = std::make_tuple(h, w, sign);
    auto it = cache.plans_.find(key);
    if (it != cache.plans_.end()) return it->second;
    // Planned out-of-place on scratch buffers; fftw_execute_dft requires the
    // same in/out-placeness as the plan.
    std::vector<std::complex<double>> scratch_in(static_cast<std::size_t>(h) * w);
    std::vector<std::complex<double>> scratch_out(scratch_in.size());
    fftw_plan plan = fftw_plan_dft_2d(
        h, w, reinterpret_cast<fftw_complex*>(scratch_in.data()),
        reinterpret_cast<fftw_complex*>(scratch_out.data()), sign,
        FFTW_ESTIMATE | FFTW_UNALIGNED);
    cache.plans_.emplace(key, plan);
    return plan;
  }

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

void execute_dft(int h, int w, int sign, std::complex<double>* in,
                 std::complex<double>* out) {
  fftw_plan plan = PlanCache::get(h, w, sign);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(in),
                   reinterpret_cast<fftw_complex*>(out));
}

// Circular shift rows by dr and columns by dc.
void circshift(const std::vector<std::complex<double>>& in,
               std::vector<std::complex<double>>& out, int h, int w, int dr,
               int dc) {
  for (int r = 0; r < h; ++r) {
    const int rr = (r + dr) % h;
    for (int c = 0; c < w; ++c) {
      const int cc = (c + dc) % w;
      out[static_cast<std::size_t>(rr) * w + cc] =
          in[static_cast<std::size_t>(r) * w + c];
    }
  }
}

}  // namespace

Spectrum fft2(const ImagePlane& img, int channel) {
  const int h = img.height();
  const int w = img.width();
  if (h == 0 || w == 0) throw ShapeError("fft2: empty image");
  std::vector<std::complex<double>> buf(static_cast<std::size_t>(h) * w);
  auto src = img.channel_span(channel);
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = src[i];

  std::vector<std::complex<double>> raw(buf.size());
  execute_dft(h, w, FFTW_FORWARD, buf.data(), raw.data());

  Spectrum out(h, w);
  // Center (DC from index 0 to floor(n/2)) and apply unitary normalization.
  circshift(raw, out.coef(), h, w, h / 2, w / 2);
  const double scale = 1.0 / std::sqrt(static_cast<double>(h) * w);
  for (auto& v : out.coef()) v *= scale;
  return out;
}

ImagePlane ifft2(const Spectrum& s, double* imag_residue) {
  const int h = s.height();
  const int w = s.width();
  if (h == 0 || w == 0) throw ShapeError("ifft2: empty spectrum");
  // Undo centering: shift DC back to index 0 (inverse of the +floor(n/2) shift).
  std::vector<std::complex<double>> uncentered(s.coef().size());
  circshift(s.coef(), uncentered, h, w, (h + 1) / 2, (w + 1) / 2);

  std::vector<std::complex<double>> raw(uncentered.size());
  execute_dft(h, w, FFTW_BACKWARD, uncentered.data(), raw.data());

  const double scale = 1.0 / std::sqrt(static_cast<double>(h) * w);
  ImagePlane out(h, w, 1);
  double residue = 0.0;
  auto dst = out.channel_span(0);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const std::complex<double> v = raw[i] * scale;
    dst[i] = v.real();
    residue = std::max(residue, std::abs(v.imag()));
  }
  if (imag_residue) *imag_residue = residue;
  return out;
}

bool GainGrid::is_binary(double tol) const {
  for (double v : values)
    if (std::abs(v) > tol && std::abs(v - 1.0) > tol) return false;
  return true;
}

RadialMask make_mask(int height, int width, double alpha, double beta,
                     double gamma, MaskExtent extent) {
  if (height <= 0 || width <= 0) throw DimensionError("make_mask: empty grid");
  if (gamma <= 0.0) throw ParamError("make_mask: gamma must be > 0");
  if (beta < 0.0) throw ParamError("make_mask: beta must be >= 0");

  double ru = 0.0, rv = 0.0;
  switch (extent) {
    case MaskExtent::kMin:
      ru = rv = std::min(height, width) / 2.0;
      break;
    case MaskExtent::kMax:
      ru = rv = std::max(height, width) / 2.0;
      break;
    case MaskExtent::kPerAxis:
      ru = width / 2.0;
      rv = height / 2.0;
      break;
  }

  RadialMask mask;
  mask.alpha = alpha;
  mask.beta = beta;
  mask.gamma = gamma;
  mask.extent = extent;
  mask.gains = GainGrid(height, width);
  for (int r = 0; r < height; ++r) {
    const int v = centered_frequency(r, height);
    for (int c = 0; c < width; ++c) {
      const int u = centered_frequency(c, width);
      const double fu = alpha * u / ru;
      const double fv = alpha * v / rv;
      const double radial = std::pow(fu * fu + fv * fv, gamma);
      mask.gains.at(r, c) = std::clamp(radial + beta, 0.0, 1.0);
    }
  }
  return mask;
}

RadialMask binary_mask_from(const RadialMask& mask, double threshold) {
  if (threshold <= 0.0 || threshold >= 1.0)
    throw ParamError("binary_mask_from: threshold must be in (0,1)");
  RadialMask out = mask;
  for (double& v : out.gains.values) v = (v >= threshold) ? 1.0 : 0.0;
  return out;
}

ImagePlane project(const ImagePlane& img, const GainGrid& gains,
                   ProjectionBand band) {
  if (img.height() != gains.height || img.width() != gains.width)
    throw ShapeError("project: mask grid does not match image size");

  ImagePlane out(img.height(), img.width(), img.channels());
  for (int ch = 0; ch < img.channels(); ++ch) {
    Spectrum s = fft2(img, ch);
    for (int r = 0; r < s.height(); ++r)
      for (int c = 0; c < s.width(); ++c) {
        const double g = (band == ProjectionBand::kHigh)
                             ? gains.at(r, c)
                             : 1.0 - gains.at(r, c);
        s.at(r, c) *= g;
      }
    double residue = 0.0;
    ImagePlane real = ifft2(s, &residue);
    if (residue >= 1e-10)
      throw NumericError("project: imaginary residue " +
                         std::to_string(residue) +
                         " exceeds 1e-10; mask symmetry violated");
    out.set_channel(ch, real);
  }
  return out;
}

ImagePlane project(const ImagePlane& img, const RadialMask& mask,
                   ProjectionBand band) {
  return project(img, mask.gains, band);
}

ImagePlane log_spectrum(const ImagePlane& img) {
  if (img.channels() != 1) throw ShapeError("log_spectrum: single channel only");
  Spectrum s = fft2(img, 0);
  ImagePlane out(img.height(), img.width(), 1);
  for (int r = 0; r < s.height(); ++r)
    for (int c = 0; c < s.width(); ++c)
      out.at(r, c) = std::log1p(std::abs(s.at(r, c)));
  return out;
}

ImagePlane gains_as_image(const GainGrid& gains) {
  ImagePlane out(gains.height, gains.width, 1);
  for (int r = 0; r < gains.height; ++r)
    for (int c = 0; c < gains.width; ++c) out.at(r, c) = gains.at(r, c);
  return out;
}

}  // namespace burstlab
