#include "burstlab/fusion.hpp"

#include <cmath>

namespace burstlab {

void FusionConfig::validate() const {
  if (sr_factor < 1) throw ParamError("fusion: sr_factor must be >= 1");
  if (kernel_sigma <= 0.0) throw ParamError("fusion: kernel_sigma must be > 0");
  if (min_weight <= 0.0) throw ParamError("fusion: min_weight must be > 0");
}

Homography lr_to_hr_homography(const Homography& h_lr, int sr_factor) {
  // Mean phase of the space-to-depth quad interleave: x_hr = s*x_lr + (1-s).
  Homography scale;
  scale.at(0, 0) = sr_factor;
  scale.at(1, 1) = sr_factor;
  scale.at(0, 2) = 1.0 - sr_factor;
  scale.at(1, 2) = 1.0 - sr_factor;
  return (scale * h_lr * scale.inverse()).normalized();
}

namespace {

// Fill holes per channel: horizontal pass interpolates between the nearest
// valid samples in the row, a vertical pass then closes rows that had no
// valid sample at all. Deterministic and total unless the channel is empty.
void fill_holes(std::vector<double>& value, std::vector<std::uint8_t>& valid,
                int h, int w, int channel_id) {
  auto idx = [w](int r, int c) { return static_cast<std::size_t>(r) * w + c; };

  bool any_valid = false;
  for (std::uint8_t v : valid) any_valid |= (v != 0);
  if (!any_valid)
    throw CoverageError("fuse: channel " + std::to_string(channel_id) +
                        " received no samples");

  std::vector<std::uint8_t> row_filled = valid;
  for (int r = 0; r < h; ++r) {
    int prev = -1;
    for (int c = 0; c <= w; ++c) {
      const bool is_valid = (c < w) && valid[idx(r, c)];
      if (!is_valid && c < w) continue;
      const int next = (c < w) ? c : -1;
      // close the gap (prev, next)
      int gap_begin = prev + 1;
      int gap_end = (next >= 0 ? next : w) - 1;
      for (int g = gap_begin; g <= gap_end; ++g) {
        if (prev >= 0 && next >= 0) {
          const double t =
              static_cast<double>(g - prev) / static_cast<double>(next - prev);
          value[idx(r, g)] =
              (1.0 - t) * value[idx(r, prev)] + t * value[idx(r, next)];
          row_filled[idx(r, g)] = 1;
        } else if (prev >= 0) {
          value[idx(r, g)] = value[idx(r, prev)];
          row_filled[idx(r, g)] = 1;
        } else if (next >= 0) {
          value[idx(r, g)] = value[idx(r, next)];
          row_filled[idx(r, g)] = 1;
        }
      }
      prev = next;
    }
  }

  // Vertical pass for rows that were entirely empty.
  for (int c = 0; c < w; ++c) {
    int prev = -1;
    for (int r = 0; r <= h; ++r) {
      const bool is_valid = (r < h) && row_filled[idx(r, c)];
      if (!is_valid && r < h) continue;
      const int next = (r < h) ? r : -1;
      for (int g = prev + 1; g <= ((next >= 0 ? next : h) - 1); ++g) {
        if (prev >= 0 && next >= 0) {
          const double t =
              static_cast<double>(g - prev) / static_cast<double>(next - prev);
          value[idx(g, c)] =
              (1.0 - t) * value[idx(prev, c)] + t * value[idx(next, c)];
        } else if (prev >= 0) {
          value[idx(g, c)] = value[idx(prev, c)];
        } else if (next >= 0) {
          value[idx(g, c)] = value[idx(next, c)];
        }
      }
      prev = next;
    }
  }
}

}  // namespace

ImagePlane fuse(const Burst& burst, const Trajectory& trajectory,
                const FusionConfig& cfg, FusionStats* stats) {
  cfg.validate();
  burst.validate();
  if (trajectory.size() != burst.size())
    throw ShapeError("fuse: trajectory length does not match burst");
  trajectory.validate();

  const RawFrame& first = burst.frames.front();
  const int s = cfg.sr_factor;
  const int out_h = first.height * s;
  const int out_w = first.width * s;
  const double sigma = cfg.kernel_sigma;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);

  std::vector<std::vector<double>> num(3), den(3);
  for (int ch = 0; ch < 3; ++ch) {
    num[ch].assign(static_cast<std::size_t>(out_h) * out_w, 0.0);
    den[ch].assign(static_cast<std::size_t>(out_h) * out_w, 0.0);
  }

  for (int i = 0; i < burst.size(); ++i) {
    const RawFrame& frame = burst.frames[i];
    const Homography to_ref = trajectory.frames[i].inverse();
    for (int r = 0; r < frame.height; ++r) {
      const int hr_row = 2 * s * (r / 2) + (r % 2);
      for (int c = 0; c < frame.width; ++c) {
        const int hr_col = 2 * s * (c / 2) + (c % 2);
        const int ch = cfa_channel_at(frame.cfa, r % 2, c % 2);
        double qx, qy;
        to_ref.apply(hr_col + 0.5, hr_row + 0.5, qx, qy);
        const double v = frame.at(r, c);

        const int cc = static_cast<int>(std::floor(qx - 0.5));
        const int cr = static_cast<int>(std::floor(qy - 0.5));
        const int c_lo = std::max(0, cc - radius);
        const int c_hi = std::min(out_w - 1, cc + radius + 1);
        const int r_lo = std::max(0, cr - radius);
        const int r_hi = std::min(out_h - 1, cr + radius + 1);
        for (int orow = r_lo; orow <= r_hi; ++orow) {
          const double dy = orow + 0.5 - qy;
          for (int ocol = c_lo; ocol <= c_hi; ++ocol) {
            const double dx = ocol + 0.5 - qx;
            const double d2 = dx * dx + dy * dy;
            if (d2 > (3.0 * sigma) * (3.0 * sigma)) continue;
            const double w = std::exp(-d2 * inv_two_sigma2);
            const std::size_t o = static_cast<std::size_t>(orow) * out_w + ocol;
            num[ch][o] += w * v;
            den[ch][o] += w;
          }
        }
      }
    }
  }

  ImagePlane out(out_h, out_w, 3);
  for (int ch = 0; ch < 3; ++ch) {
    std::vector<double> value(static_cast<std::size_t>(out_h) * out_w, 0.0);
    std::vector<std::uint8_t> valid(value.size(), 0);
    long holes = 0;
    for (std::size_t o = 0; o < value.size(); ++o) {
      if (den[ch][o] >= cfg.min_weight) {
        value[o] = num[ch][o] / den[ch][o];
        valid[o] = 1;
      } else {
        ++holes;
      }
    }
    if (stats) stats->holes[ch] = holes;
    fill_holes(value, valid, out_h, out_w, ch);
    auto dst = out.channel_span(ch);
    std::copy(value.begin(), value.end(), dst.begin());
  }
  return out;
}

ReconstructResult reconstruct(const Burst& burst, const FusionConfig& cfg,
                              const RegistrationOptions& reg) {
  cfg.validate();
  burst.validate();

  ReconstructResult result;
  if (cfg.use_given_trajectory) {
    result.trajectory = burst.trajectory;
    result.image = fuse(burst, result.trajectory, cfg);
    return result;
  }

  const AlignResult aligned = align_burst(burst, reg);
  Burst kept;
  kept.meta = burst.meta;
  Trajectory kept_traj;
  for (int i = 0; i < burst.size(); ++i) {
    if (!aligned.frame_ok[i]) {
      ++result.dropped_frames;
      continue;
    }
    kept.frames.push_back(burst.frames[i]);
    kept_traj.frames.push_back(
        lr_to_hr_homography(aligned.trajectory.frames[i], cfg.sr_factor));
  }
  kept.trajectory = kept_traj;
  result.trajectory = kept_traj;
  result.image = fuse(kept, kept_traj, cfg);
  return result;
}

}  // namespace burstlab
