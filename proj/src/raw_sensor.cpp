#include "burstlab/raw_sensor.hpp"

#include <algorithm>
#include <cmath>

#include "burstlab/geometry.hpp"
#include "burstlab/rng.hpp"

namespace burstlab {

RawFrame mosaic(const ImagePlane& rgb, CfaPattern cfa) {
  if (rgb.channels() != 3) throw ShapeError("mosaic: input must have 3 channels");
  if (rgb.height() % 2 != 0 || rgb.width() % 2 != 0)
    throw DimensionError("mosaic: dimensions must be even");
  RawFrame out(rgb.height(), rgb.width(), cfa);
  for (int r = 0; r < rgb.height(); ++r)
    for (int c = 0; c < rgb.width(); ++c)
      out.at(r, c) = rgb.at(r, c, cfa_channel_at(cfa, r % 2, c % 2));
  return out;
}

namespace {

// Bilinear interpolation of a sparse site lattice (phase r0,c0; pitch 2)
// onto the full grid. Lattice coordinates are clamped at the borders, so
// native sites reproduce exactly and edge pixels replicate.
void interpolate_sites(const RawFrame& raw, int r0, int c0, ImagePlane& out,
                       int channel, double weight) {
  const int sh = raw.height / 2;  // site grid height
  const int sw = raw.width / 2;
  auto site = [&](int i, int j) {
    i = std::clamp(i, 0, sh - 1);
    j = std::clamp(j, 0, sw - 1);
    return raw.at(r0 + 2 * i, c0 + 2 * j);
  };
  for (int r = 0; r < raw.height; ++r) {
    const double fi = (r - r0) / 2.0;
    const double fic = std::clamp(fi, 0.0, static_cast<double>(sh - 1));
    const int i0 = static_cast<int>(std::floor(fic));
    const double wi = fic - i0;
    for (int c = 0; c < raw.width; ++c) {
      const double fj = (c - c0) / 2.0;
      const double fjc = std::clamp(fj, 0.0, static_cast<double>(sw - 1));
      const int j0 = static_cast<int>(std::floor(fjc));
      const double wj = fjc - j0;
      const double v = (1 - wi) * ((1 - wj) * site(i0, j0) + wj * site(i0, j0 + 1)) +
                       wi * ((1 - wj) * site(i0 + 1, j0) + wj * site(i0 + 1, j0 + 1));
      out.at(r, c, channel) += weight * v;
    }
  }
}

}  // namespace

ImagePlane extract_channels(const RawFrame& raw) {
  if (raw.height % 2 != 0 || raw.width % 2 != 0)
    throw DimensionError("extract_channels: dimensions must be even");
  ImagePlane out(raw.height, raw.width, 3);
  // Locate the site phase of each color in the 2x2 tile.
  for (int tr = 0; tr < 2; ++tr)
    for (int tc = 0; tc < 2; ++tc) {
      const int ch = cfa_channel_at(raw.cfa, tr, tc);
      const double weight = (ch == 1) ? 0.5 : 1.0;  // two green phases, averaged
      interpolate_sites(raw, tr, tc, out, ch, weight);
    }
  // Native sites reproduce the raw value exactly. R/B get this from the
  // clamped lattice interpolation; green needs it enforced because the
  // cross-phase average would otherwise blend in neighbors.
  for (int r = 0; r < raw.height; ++r)
    for (int c = 0; c < raw.width; ++c)
      if (cfa_channel_at(raw.cfa, r % 2, c % 2) == 1)
        out.at(r, c, 1) = raw.at(r, c);
  return out;
}

ImagePlane pack_burst(const Burst& burst) {
  if (burst.frames.empty()) throw ShapeError("pack_burst: empty burst");
  const RawFrame& first = burst.frames.front();
  for (const RawFrame& f : burst.frames)
    if (f.height != first.height || f.width != first.width || f.cfa != first.cfa)
      throw ShapeError("pack_burst: heterogeneous frames");

  const int n = static_cast<int>(burst.frames.size());
  ImagePlane out(first.height, first.width, 3 * n);
  for (int i = 0; i < n; ++i) {
    ImagePlane rgb = extract_channels(burst.frames[i]);
    for (int ch = 0; ch < 3; ++ch) out.set_channel(3 * i + ch, rgb.channel(ch));
  }
  return out;
}

RawFrame space_to_depth_decimate(const RawFrame& raw, int factor) {
  if (factor < 1) throw ParamError("space_to_depth_decimate: factor must be >= 1");
  if (raw.height % (2 * factor) != 0 || raw.width % (2 * factor) != 0)
    throw DimensionError("space_to_depth_decimate: dimensions not divisible by 2s");
  if (factor == 1) return raw;

  RawFrame out(raw.height / factor, raw.width / factor, raw.cfa, 0.0,
               raw.bit_depth);
  for (int r = 0; r < out.height; ++r) {
    const int src_r = 2 * factor * (r / 2) + (r % 2);
    for (int c = 0; c < out.width; ++c) {
      const int src_c = 2 * factor * (c / 2) + (c % 2);
      out.at(r, c) = raw.at(src_r, src_c);
    }
  }
  return out;
}

RawFrame add_poisson_gaussian(const RawFrame& frame, const NoiseParams& params) {
  params.validate();
  const double a = params.effective_shot_gain();
  const double read_var = params.effective_read_var();
  if (a == 0.0 && read_var == 0.0) return frame;

  RawFrame out = frame;
  auto rng = make_rng(params.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : out.data) {
    const double mu = v;
    double sample;
    if (params.exact_poisson && a > 0.0) {
      // Photon count at gain a: mean mu/a, scaled back; variance a*mu.
      std::poisson_distribution<long> poisson(std::max(mu, 0.0) / a);
      sample = a * static_cast<double>(poisson(rng)) +
               std::sqrt(read_var) * normal(rng);
    } else {
      const double var = std::max(a * mu + read_var, 0.0);
      sample = mu + std::sqrt(var) * normal(rng);
    }
    v = std::clamp(sample, 0.0, 1.0);
  }
  return out;
}

}  // namespace burstlab
