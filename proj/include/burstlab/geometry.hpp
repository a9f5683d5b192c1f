#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "burstlab/image.hpp"

namespace burstlab {

/// 3x3 projective transform, row-major, normalized so m[8] == 1.
struct Homography {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Homography identity() { return {}; }
  static Homography translation(double tx, double ty);

  double at(int r, int c) const { return m[3 * r + c]; }
  double& at(int r, int c) { return m[3 * r + c]; }

  double det() const;
  /// Scales so m[2][2] == 1; throws NumericError when that entry vanishes.
  Homography normalized() const;
  Homography inverse() const;

  /// Map point (x, y) in homogeneous coordinates.
  void apply(double x, double y, double& ox, double& oy) const;

  bool is_identity(double tol = 0.0) const;
};

Homography operator*(const Homography& a, const Homography& b);

/// Per-frame homographies relative to frame 0 (which is the identity).
struct Trajectory {
  std::vector<Homography> frames;

  int size() const { return static_cast<int>(frames.size()); }
  /// Checks non-emptiness, leading identity and invertibility.
  void validate(double identity_tol = 1e-9) const;
};

/// Per-pixel boolean coverage mask.
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  Mask() = default;
  Mask(int h, int w, bool fill = false)
      : height(h), width(w),
        data(static_cast<std::size_t>(h) * w, fill ? 1 : 0) {}

  bool at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c] != 0; }
  void set(int r, int c, bool v) { data[static_cast<std::size_t>(r) * width + c] = v ? 1 : 0; }
  double true_fraction() const;
};

struct WarpResult {
  ImagePlane image;
  Mask validity;  // true where all bilinear source taps were in bounds
};

/// An ordered burst of raw frames plus its motion relative to frame 0.
struct Burst {
  std::vector<RawFrame> frames;
  Trajectory trajectory;
  std::map<std::string, std::string> meta;

  int size() const { return static_cast<int>(frames.size()); }
  void validate() const;
};

/// Resample src under homography h: output pixel p (pixel-center convention,
/// coordinates at index + 0.5) is the bilinear sample of src at h^-1 * p.
/// Out-of-bounds taps yield value 0 and validity false.
WarpResult warp(const ImagePlane& src, const Homography& h);

/// Hand-tremor model parameters; all sigmas are stationary AR(1) stds.
struct TremorParams {
  double magnitude_px = 2.0;       // translation std
  double rho = 0.9;                // lag-1 correlation, in [0,1)
  double rot_sigma_rad = 0.1 * 3.14159265358979323846 / 180.0;
  double scale_sigma = 0.002;
  double shear_sigma = 0.002;
  double persp_sigma = 1e-5;
  double center_x = 0.0;           // rotation/scale pivot
  double center_y = 0.0;
};

Trajectory synth_trajectory(int n_frames, double magnitude, double smoothness,
                            std::uint64_t seed);
Trajectory synth_trajectory(int n_frames, const TremorParams& params,
                            std::uint64_t seed);

Trajectory load_trajectory(const std::filesystem::path& path);
void save_trajectory(const Trajectory& t, const std::filesystem::path& path);

enum class MotionModel { kTranslation, kAffine, kHomography };

struct RegistrationOptions {
  MotionModel model = MotionModel::kHomography;
  int levels = 3;
  int max_iters = 50;
  double tol = 1e-6;
  // Pixels (at full resolution) ignored at the template border and near the
  // moving image's border. Keeps zero-filled out-of-view bands of warped
  // synthetic frames out of the residual.
  double border_margin = 4.0;
};

struct RegistrationResult {
  Homography h;       // best-so-far estimate (spec convention: ref ~ warp(moving, h))
  bool converged = false;
  int iterations = 0;
  double initial_ssd = 0.0;
  double final_ssd = 0.0;
};

/// Inverse-compositional Gauss-Newton registration on intensities,
/// coarse-to-fine. Inputs must be single-channel (luma-reduce first).
RegistrationResult estimate_homography(const ImagePlane& ref,
                                       const ImagePlane& moving,
                                       const RegistrationOptions& opts = {});

struct AlignResult {
  Trajectory trajectory;
  std::vector<bool> frame_ok;
  int failed_count = 0;
};

/// Estimate the per-frame homography to frame 0 on linearly demosaiced luma.
/// Failed frames keep the identity and are flagged.
AlignResult align_burst(const Burst& burst, const RegistrationOptions& opts = {});

/// Mean displacement of the four image corners between two homographies.
double corner_error(const Homography& a, const Homography& b, int height,
                    int width);

}  // namespace burstlab
