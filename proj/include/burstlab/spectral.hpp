#pragma once

#include <complex>
#include <vector>

#include "burstlab/image.hpp"

namespace burstlab {

/// Centered complex spectrum, DC at (height/2, width/2).
class Spectrum {
 public:
  Spectrum() = default;
  Spectrum(int height, int width)
      : height_(height), width_(width),
        coef_(static_cast<std::size_t>(height) * width) {}

  int height() const { return height_; }
  int width() const { return width_; }

  std::complex<double>& at(int r, int c) {
    return coef_[static_cast<std::size_t>(r) * width_ + c];
  }
  std::complex<double> at(int r, int c) const {
    return coef_[static_cast<std::size_t>(r) * width_ + c];
  }

  std::vector<std::complex<double>>& coef() { return coef_; }
  const std::vector<std::complex<double>>& coef() const { return coef_; }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::complex<double>> coef_;
};

/// Unitary forward transform of one channel; output centered.
Spectrum fft2(const ImagePlane& img, int channel = 0);

/// Unitary inverse transform; returns the real part.
/// If `imag_residue` is non-null, the max |imaginary part| is stored there.
ImagePlane ifft2(const Spectrum& s, double* imag_residue = nullptr);

/// Centered integer frequency of grid index: j - floor(n/2).
inline int centered_frequency(int index, int n) { return index - n / 2; }

/// Plain per-bin gain field on the centered frequency grid.
struct GainGrid {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  GainGrid() = default;
  GainGrid(int h, int w, double fill = 0.0)
      : height(h), width(w),
        values(static_cast<std::size_t>(h) * w, fill) {}

  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * width + c]; }
  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }

  /// Gain at centered frequency (u horizontal, v vertical).
  double at_frequency(int u, int v) const {
    return at(v + height / 2, u + width / 2);
  }

  bool is_binary(double tol = 0.0) const;
};

/// How the radius R is derived from a rectangular grid.
enum class MaskExtent { kMin, kMax, kPerAxis };

/// Radial high-pass gain h(u,v) = clip(((a*u/R)^2 + (a*v/R)^2)^g + b, 0, 1).
struct RadialMask {
  double alpha = 0.8;
  double beta = 0.2;
  double gamma = 4.0;
  MaskExtent extent = MaskExtent::kMin;
  GainGrid gains;

  int height() const { return gains.height; }
  int width() const { return gains.width; }
};

RadialMask make_mask(int height, int width, double alpha, double beta,
                     double gamma, MaskExtent extent = MaskExtent::kMin);

/// Hard-projection analogue: gain 1 where soft gain >= threshold, else 0.
RadialMask binary_mask_from(const RadialMask& mask, double threshold);

enum class ProjectionBand { kHigh, kLow };

/// P_H(x) = F^-1(h . F(x)) per channel (low mode uses gains 1-h).
/// Asserts the imaginary residue of the inverse transform is < 1e-10.
ImagePlane project(const ImagePlane& img, const GainGrid& gains,
                   ProjectionBand band);
ImagePlane project(const ImagePlane& img, const RadialMask& mask,
                   ProjectionBand band);

/// ln(1 + |F(x)|) of a single-channel image, centered.
ImagePlane log_spectrum(const ImagePlane& img);

/// Mask gains as a single-channel image for export.
ImagePlane gains_as_image(const GainGrid& gains);

}  // namespace burstlab
