#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "burstlab/errors.hpp"

namespace burstlab {

/// Planar (channel-major) double-precision image with linear radiometry.
/// Values are nominally in [0,1] but intermediates (gradients, spectra
/// magnitudes, differences) reuse the type without range restriction.
class ImagePlane {
 public:
  ImagePlane() = default;
  ImagePlane(int height, int width, int channels, double fill = 0.0);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  int pixels() const { return height_ * width_; }
  std::size_t size() const { return data_.size(); }

  double& at(int r, int c, int ch = 0) {
    return data_[(static_cast<std::size_t>(ch) * height_ + r) * width_ + c];
  }
  double at(int r, int c, int ch = 0) const {
    return data_[(static_cast<std::size_t>(ch) * height_ + r) * width_ + c];
  }

  std::span<double> channel_span(int ch) {
    return {data_.data() + static_cast<std::size_t>(ch) * pixels(),
            static_cast<std::size_t>(pixels())};
  }
  std::span<const double> channel_span(int ch) const {
    return {data_.data() + static_cast<std::size_t>(ch) * pixels(),
            static_cast<std::size_t>(pixels())};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const ImagePlane& other) const {
    return height_ == other.height_ && width_ == other.width_ &&
           channels_ == other.channels_;
  }

  /// Single-channel copy of channel `ch`.
  ImagePlane channel(int ch) const;
  void set_channel(int ch, const ImagePlane& src);

  bool all_finite() const;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

ImagePlane operator+(const ImagePlane& a, const ImagePlane& b);
ImagePlane operator-(const ImagePlane& a, const ImagePlane& b);
ImagePlane operator*(double s, const ImagePlane& a);

/// Linear luma, weights (1/4, 1/2, 1/4) for RGB; identity for single channel.
ImagePlane luma(const ImagePlane& img);

/// 2x2 tile assignment of color filters.
enum class CfaPattern { kRggb, kBggr, kGrbg, kGbrg };

/// Channel index (0=R,1=G,2=B) at tile offset (r%2, c%2).
int cfa_channel_at(CfaPattern cfa, int tile_row, int tile_col);

std::string to_string(CfaPattern cfa);
CfaPattern cfa_from_string(const std::string& name);

/// One Bayer-mosaiced sensor frame, linear values in [0,1].
struct RawFrame {
  int height = 0;
  int width = 0;
  CfaPattern cfa = CfaPattern::kRggb;
  std::vector<double> data;  // row-major, height*width
  int bit_depth = 16;        // metadata for file round-trip

  RawFrame() = default;
  RawFrame(int h, int w, CfaPattern pattern, double fill = 0.0,
           int bits = 16);

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }

  /// Enforces even dimensions, value range and finiteness.
  void validate() const;
};

/// Heteroscedastic sensor-noise parameters: variance = shot_gain*mu + read_sigma^2.
struct NoiseParams {
  double shot_gain = 0.01;
  double read_sigma = 0.02;
  std::uint64_t seed = 0;
  bool exact_poisson = false;  // sample true Poisson shot noise instead of
                               // the Gaussian heteroscedastic approximation
  double iso_scale = 1.0;      // linear multiplier on shot_gain and read_sigma^2

  void validate() const;
  double effective_shot_gain() const { return shot_gain * iso_scale; }
  double effective_read_var() const { return read_sigma * read_sigma * iso_scale; }
};

}  // namespace burstlab
