#include "burstlab/image.hpp"

#include <algorithm>
#include <cmath>

namespace burstlab {

ImagePlane::ImagePlane(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 0 || width < 0 || channels < 0)
    throw DimensionError("ImagePlane: negative dimension");
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

ImagePlane ImagePlane::channel(int ch) const {
  if (ch < 0 || ch >= channels_) throw ShapeError("channel index out of range");
  ImagePlane out(height_, width_, 1);
  auto src = channel_span(ch);
  std::copy(src.begin(), src.end(), out.data_.begin());
  return out;
}

void ImagePlane::set_channel(int ch, const ImagePlane& src) {
  if (ch < 0 || ch >= channels_) throw ShapeError("channel index out of range");
  if (src.height_ != height_ || src.width_ != width_ || src.channels_ != 1)
    throw ShapeError("set_channel: source shape mismatch");
  auto dst = channel_span(ch);
  std::copy(src.data_.begin(), src.data_.end(), dst.begin());
}

bool ImagePlane::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

static void require_same_shape(const ImagePlane& a, const ImagePlane& b) {
  if (!a.same_shape(b)) throw ShapeError("image shape mismatch");
}

ImagePlane operator+(const ImagePlane& a, const ImagePlane& b) {
  require_same_shape(a, b);
  ImagePlane out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

ImagePlane operator-(const ImagePlane& a, const ImagePlane& b) {
  require_same_shape(a, b);
  ImagePlane out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

ImagePlane operator*(double s, const ImagePlane& a) {
  ImagePlane out = a;
  for (double& v : out.data()) v *= s;
  return out;
}

ImagePlane luma(const ImagePlane& img) {
  if (img.channels() == 1) return img;
  if (img.channels() != 3) throw ShapeError("luma expects 1 or 3 channels");
  ImagePlane out(img.height(), img.width(), 1);
  for (int r = 0; r < img.height(); ++r)
    for (int c = 0; c < img.width(); ++c)
      out.at(r, c) =
          0.25 * img.at(r, c, 0) + 0.5 * img.at(r, c, 1) + 0.25 * img.at(r, c, 2);
  return out;
}

int cfa_channel_at(CfaPattern cfa, int tile_row, int tile_col) {
  // Tables are (row-major) channel ids for the 2x2 tile.
  static constexpr int kRggb[4] = {0, 1, 1, 2};
  static constexpr int kBggr[4] = {2, 1, 1, 0};
  static constexpr int kGrbg[4] = {1, 0, 2, 1};
  static constexpr int kGbrg[4] = {1, 2, 0, 1};
  const int idx = (tile_row & 1) * 2 + (tile_col & 1);
  switch (cfa) {
    case CfaPattern::kRggb: return kRggb[idx];
    case CfaPattern::kBggr: return kBggr[idx];
    case CfaPattern::kGrbg: return kGrbg[idx];
    case CfaPattern::kGbrg: return kGbrg[idx];
  }
  throw ParamError("unknown CFA pattern");
}

std::string to_string(CfaPattern cfa) {
  switch (cfa) {
    case CfaPattern::kRggb: return "RGGB";
    case CfaPattern::kBggr: return "BGGR";
    case CfaPattern::kGrbg: return "GRBG";
    case CfaPattern::kGbrg: return "GBRG";
  }
  throw ParamError("unknown CFA pattern");
}

CfaPattern cfa_from_string(const std::string& name) {
  if (name == "RGGB") return CfaPattern::kRggb;
  if (name == "BGGR") return CfaPattern::kBggr;
  if (name == "GRBG") return CfaPattern::kGrbg;
  if (name == "GBRG") return CfaPattern::kGbrg;
  throw FormatError("unknown CFA pattern: " + name);
}

RawFrame::RawFrame(int h, int w, CfaPattern pattern, double fill, int bits)
    : height(h), width(w), cfa(pattern), bit_depth(bits) {
  if (h < 0 || w < 0) throw DimensionError("RawFrame: negative dimension");
  data.assign(static_cast<std::size_t>(h) * w, fill);
}

void RawFrame::validate() const {
  if (height % 2 != 0 || width % 2 != 0)
    throw DimensionError("RawFrame: dimensions must be even");
  if (data.size() != static_cast<std::size_t>(height) * width)
    throw ShapeError("RawFrame: data size mismatch");
  if (bit_depth < 1 || bit_depth > 16)
    throw ParamError("RawFrame: bit_depth must be in [1,16]");
  for (double v : data)
    if (!std::isfinite(v) || v < 0.0 || v > 1.0)
      throw NumericError("RawFrame: value outside [0,1]");
}

void NoiseParams::validate() const {
  if (shot_gain < 0.0) throw ParamError("NoiseParams: shot_gain must be >= 0");
  if (read_sigma < 0.0) throw ParamError("NoiseParams: read_sigma must be >= 0");
  if (iso_scale < 0.0) throw ParamError("NoiseParams: iso_scale must be >= 0");
}

}  // namespace burstlab
