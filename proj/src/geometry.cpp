#include "burstlab/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <numeric>

#include "burstlab/raw_sensor.hpp"
#include "burstlab/rng.hpp"
#include <json.hpp>

namespace burstlab {

Homography Homography::translation(double tx, double ty) {
  Homography h;
  h.at(0, 2) = tx;
  h.at(1, 2) = ty;
  return h;
}

double Homography::det() const {
  return m[0] * (m[4] * m[8] - m[5] * m[7]) -
         m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

Homography Homography::normalized() const {
  if (std::abs(m[8]) < 1e-300)
    throw NumericError("Homography: cannot normalize, m[2][2] is zero");
  Homography out;
  for (int i = 0; i < 9; ++i) out.m[i] = m[i] / m[8];
  out.m[8] = 1.0;
  return out;
}

Homography Homography::inverse() const {
  const double d = det();
  if (std::abs(d) < 1e-12) throw NumericError("Homography: singular matrix");
  Homography adj;
  adj.m[0] = m[4] * m[8] - m[5] * m[7];
  adj.m[1] = m[2] * m[7] - m[1] * m[8];
  adj.m[2] = m[1] * m[5] - m[2] * m[4];
  adj.m[3] = m[5] * m[6] - m[3] * m[8];
  adj.m[4] = m[0] * m[8] - m[2] * m[6];
  adj.m[5] = m[2] * m[3] - m[0] * m[5];
  adj.m[6] = m[3] * m[7] - m[4] * m[6];
  adj.m[7] = m[1] * m[6] - m[0] * m[7];
  adj.m[8] = m[0] * m[4] - m[1] * m[3];
  for (double& v : adj.m) v /= d;
  return adj.normalized();
}

void Homography::apply(double x, double y, double& ox, double& oy) const {
  const double w = m[6] * x + m[7] * y + m[8];
  ox = (m[0] * x + m[1] * y + m[2]) / w;
  oy = (m[3] * x + m[4] * y + m[5]) / w;
}

bool Homography::is_identity(double tol) const {
  static const Homography id;
  for (int i = 0; i < 9; ++i)
    if (std::abs(m[i] - id.m[i]) > tol) return false;
  return true;
}

Homography operator*(const Homography& a, const Homography& b) {
  Homography out;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a.at(r, k) * b.at(k, c);
      out.at(r, c) = s;
    }
  return out.normalized();
}

void Trajectory::validate(double identity_tol) const {
  if (frames.empty()) throw FormatError("Trajectory: empty frame list");
  if (!frames.front().is_identity(identity_tol))
    throw FormatError("Trajectory: first homography must be the identity");
  for (const Homography& h : frames) {
    if (std::abs(h.det()) <= 1e-12)
      throw FormatError("Trajectory: non-invertible homography");
    if (std::abs(h.m[8] - 1.0) > 1e-12)
      throw FormatError("Trajectory: homography not normalized");
  }
}

double Mask::true_fraction() const {
  if (data.empty()) return 0.0;
  const auto n = std::accumulate(data.begin(), data.end(), std::size_t{0});
  return static_cast<double>(n) / static_cast<double>(data.size());
}

void Burst::validate() const {
  if (frames.empty()) throw ShapeError("Burst: no frames");
  if (static_cast<int>(frames.size()) != trajectory.size())
    throw ShapeError("Burst: frame count does not match trajectory length");
  trajectory.validate();
  for (const RawFrame& f : frames)
    if (f.height != frames.front().height || f.width != frames.front().width ||
        f.cfa != frames.front().cfa)
      throw ShapeError("Burst: heterogeneous frames");
}

namespace {

// Bilinear tap at continuous index (v=row, u=col). Exact-integer coordinates
// collapse to a single tap so that identity warps are bit-exact and edge
// pixels stay valid.
bool sample_bilinear(const ImagePlane& src, int channel, double u, double v,
                     double& out) {
  const int c0 = static_cast<int>(std::floor(u));
  const int r0 = static_cast<int>(std::floor(v));
  const double fu = u - c0;
  const double fv = v - r0;
  const int c1 = (fu == 0.0) ? c0 : c0 + 1;
  const int r1 = (fv == 0.0) ? r0 : r0 + 1;
  if (c0 < 0 || r0 < 0 || c1 >= src.width() || r1 >= src.height()) {
    out = 0.0;
    return false;
  }
  const double v00 = src.at(r0, c0, channel);
  const double v01 = src.at(r0, c1, channel);
  const double v10 = src.at(r1, c0, channel);
  const double v11 = src.at(r1, c1, channel);
  out = (1 - fv) * ((1 - fu) * v00 + fu * v01) +
        fv * ((1 - fu) * v10 + fu * v11);
  return true;
}

}  // namespace

WarpResult warp(const ImagePlane& src, const Homography& h) {
  const Homography inv = h.inverse();  // throws on singular input
  WarpResult out;
  out.image = ImagePlane(src.height(), src.width(), src.channels());
  out.validity = Mask(src.height(), src.width(), false);
  for (int r = 0; r < src.height(); ++r)
    for (int c = 0; c < src.width(); ++c) {
      double qx, qy;
      inv.apply(c + 0.5, r + 0.5, qx, qy);
      const double u = qx - 0.5;
      const double v = qy - 0.5;
      bool valid = true;
      for (int ch = 0; ch < src.channels(); ++ch) {
        double value;
        valid = sample_bilinear(src, ch, u, v, value) && valid;
        out.image.at(r, c, ch) = value;
      }
      out.validity.set(r, c, valid);
      if (!valid)
        for (int ch = 0; ch < src.channels(); ++ch) out.image.at(r, c, ch) = 0.0;
    }
  return out;
}

namespace {

Homography tremor_matrix(const std::array<double, 8>& p, double cx, double cy) {
  const double tx = p[0], ty = p[1], theta = p[2];
  const double sx = p[3], sy = p[4], shear = p[5];
  const double px = p[6], py = p[7];
  const double ct = std::cos(theta), st = std::sin(theta);
  // A = R(theta) * Shear(k) * diag(1+sx, 1+sy)
  Homography core;
  core.at(0, 0) = ct * (1 + sx);
  core.at(0, 1) = (ct * shear - st) * (1 + sy);
  core.at(1, 0) = st * (1 + sx);
  core.at(1, 1) = (st * shear + ct) * (1 + sy);
  core.at(2, 0) = px;
  core.at(2, 1) = py;
  const Homography c_fwd = Homography::translation(cx, cy);
  const Homography c_bwd = Homography::translation(-cx, -cy);
  return (Homography::translation(tx, ty) * (c_fwd * core * c_bwd)).normalized();
}

}  // namespace

Trajectory synth_trajectory(int n_frames, double magnitude, double smoothness,
                            std::uint64_t seed) {
  // The single-knob form scales the whole tremor model together, so
  // magnitude 0 is exactly zero motion and magnitude 2 reproduces the
  // defaults.
  TremorParams params;
  const double k = magnitude / TremorParams{}.magnitude_px;
  params.magnitude_px = magnitude;
  params.rot_sigma_rad *= k;
  params.scale_sigma *= k;
  params.shear_sigma *= k;
  params.persp_sigma *= k;
  params.rho = smoothness;
  return synth_trajectory(n_frames, params, seed);
}

Trajectory synth_trajectory(int n_frames, const TremorParams& params,
                            std::uint64_t seed) {
  if (n_frames < 1) throw ParamError("synth_trajectory: n_frames must be >= 1");
  if (params.rho < 0.0 || params.rho >= 1.0)
    throw ParamError("synth_trajectory: smoothness must be in [0,1)");

  const std::array<double, 8> sigma = {
      params.magnitude_px, params.magnitude_px, params.rot_sigma_rad,
      params.scale_sigma,  params.scale_sigma,  params.shear_sigma,
      params.persp_sigma,  params.persp_sigma};

  Trajectory t;
  t.frames.resize(n_frames, Homography::identity());
  if (n_frames == 1) return t;

  auto rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double rho = params.rho;
  const double innovation = std::sqrt(1.0 - rho * rho);

  // Stationary AR(1) per parameter: frame 1 drawn from the stationary
  // marginal, later frames correlated with coefficient rho. Frame 0 is the
  // reference and stays pinned at the identity.
  std::array<double, 8> state{};
  for (int i = 1; i < n_frames; ++i) {
    for (int k = 0; k < 8; ++k) {
      if (i == 1)
        state[k] = sigma[k] * normal(rng);
      else
        state[k] = rho * state[k] + innovation * sigma[k] * normal(rng);
    }
    t.frames[i] = tremor_matrix(state, params.center_x, params.center_y);
  }
  return t;
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("load_trajectory: cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("load_trajectory: malformed JSON: ") + e.what());
  }
  if (!j.contains("frames") || !j["frames"].is_array())
    throw FormatError("load_trajectory: missing \"frames\" array");

  Trajectory t;
  for (const auto& jm : j["frames"]) {
    if (!jm.is_array() || jm.size() != 3)
      throw FormatError("load_trajectory: frame is not a 3x3 matrix");
    Homography h;
    for (int r = 0; r < 3; ++r) {
      if (!jm[r].is_array() || jm[r].size() != 3)
        throw FormatError("load_trajectory: frame is not a 3x3 matrix");
      for (int c = 0; c < 3; ++c) h.at(r, c) = jm[r][c].get<double>();
    }
    t.frames.push_back(h);
  }
  t.validate();
  return t;
}

void save_trajectory(const Trajectory& t, const std::filesystem::path& path) {
  nlohmann::json frames = nlohmann::json::array();
  for (const Homography& h : t.frames) {
    nlohmann::json jm = nlohmann::json::array();
    for (int r = 0; r < 3; ++r)
      jm.push_back({h.at(r, 0), h.at(r, 1), h.at(r, 2)});
    frames.push_back(jm);
  }
  std::ofstream out(path);
  if (!out) throw FormatError("save_trajectory: cannot open " + path.string());
  out << nlohmann::json{{"frames", frames}}.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Inverse-compositional Gauss-Newton registration.
// ---------------------------------------------------------------------------

namespace {

int model_dof(MotionModel model) {
  switch (model) {
    case MotionModel::kTranslation: return 2;
    case MotionModel::kAffine: return 6;
    case MotionModel::kHomography: return 8;
  }
  throw ParamError("unknown motion model");
}

ImagePlane downsample2(const ImagePlane& img) {
  const int h = img.height() / 2;
  const int w = img.width() / 2;
  ImagePlane out(h, w, 1);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      out.at(r, c) = 0.25 * (img.at(2 * r, 2 * c) + img.at(2 * r, 2 * c + 1) +
                             img.at(2 * r + 1, 2 * c) + img.at(2 * r + 1, 2 * c + 1));
  return out;
}

Homography from_eigen(const Eigen::Matrix3d& m) {
  Homography h;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) h.at(r, c) = m(r, c);
  return h.normalized();
}

// Warp increment matrix I + A(dp) in the full 8-parameter chart.
Eigen::Matrix3d increment_matrix(const Eigen::VectorXd& dp, MotionModel model) {
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  switch (model) {
    case MotionModel::kTranslation:
      a(0, 2) = dp(0);
      a(1, 2) = dp(1);
      break;
    case MotionModel::kAffine:
      a(0, 0) = dp(0); a(0, 1) = dp(1); a(0, 2) = dp(2);
      a(1, 0) = dp(3); a(1, 1) = dp(4); a(1, 2) = dp(5);
      break;
    case MotionModel::kHomography:
      a(0, 0) = dp(0); a(0, 1) = dp(1); a(0, 2) = dp(2);
      a(1, 0) = dp(3); a(1, 1) = dp(4); a(1, 2) = dp(5);
      a(2, 0) = dp(6); a(2, 1) = dp(7);
      break;
  }
  return Eigen::Matrix3d::Identity() + a;
}

struct LevelData {
  const ImagePlane* ref;
  const ImagePlane* mov;
  double scale;    // normalization: x_norm = (x_pix - cx) / scale
  double cx, cy;
  int margin = 1;  // template pixels and moving-side samples to skip
};

// Sum of squared differences between ref and moving sampled through g
// (g maps normalized ref coords -> normalized moving coords).
double level_ssd(const LevelData& lv, const Eigen::Matrix3d& g, long* count) {
  double ssd = 0.0;
  long n = 0;
  const ImagePlane& ref = *lv.ref;
  const ImagePlane& mov = *lv.mov;
  const int m = lv.margin;
  for (int r = m; r < ref.height() - m; ++r)
    for (int c = m; c < ref.width() - m; ++c) {
      const double xn = (c + 0.5 - lv.cx) / lv.scale;
      const double yn = (r + 0.5 - lv.cy) / lv.scale;
      const Eigen::Vector3d q = g * Eigen::Vector3d(xn, yn, 1.0);
      const double mx = q(0) / q(2) * lv.scale + lv.cx - 0.5;
      const double my = q(1) / q(2) * lv.scale + lv.cy - 0.5;
      if (mx < m || my < m || mx > mov.width() - 1 - m || my > mov.height() - 1 - m)
        continue;
      double value;
      if (!sample_bilinear(mov, 0, mx, my, value)) continue;
      const double e = value - ref.at(r, c);
      ssd += e * e;
      ++n;
    }
  if (count) *count = n;
  return ssd;
}

// One pyramid level of inverse-compositional Gauss-Newton with step halving.
// g is updated in place (normalized coordinates).
void refine_level(const LevelData& lv, MotionModel model, int max_iters,
                  double tol, Eigen::Matrix3d& g, bool& converged,
                  int& iterations) {
  const ImagePlane& ref = *lv.ref;
  const int dof = model_dof(model);
  const int h = ref.height();
  const int w = ref.width();

  const int m = std::max(lv.margin, 1);

  // Template gradients (pixel units -> normalized via chain rule) and
  // steepest-descent rows, precomputed once per level.
  std::vector<Eigen::VectorXd> sd(static_cast<std::size_t>(h) * w,
                                  Eigen::VectorXd::Zero(dof));
  for (int r = m; r < h - m; ++r)
    for (int c = m; c < w - m; ++c) {
      const double gx = 0.5 * (ref.at(r, c + 1) - ref.at(r, c - 1)) * lv.scale;
      const double gy = 0.5 * (ref.at(r + 1, c) - ref.at(r - 1, c)) * lv.scale;
      const double xn = (c + 0.5 - lv.cx) / lv.scale;
      const double yn = (r + 0.5 - lv.cy) / lv.scale;
      Eigen::VectorXd row(dof);
      switch (model) {
        case MotionModel::kTranslation:
          row << gx, gy;
          break;
        case MotionModel::kAffine:
          row << gx * xn, gx * yn, gx, gy * xn, gy * yn, gy;
          break;
        case MotionModel::kHomography:
          row << gx * xn, gx * yn, gx, gy * xn, gy * yn, gy,
              -(gx * xn + gy * yn) * xn, -(gx * xn + gy * yn) * yn;
          break;
      }
      sd[static_cast<std::size_t>(r) * w + c] = row;
    }

  double current_ssd = level_ssd(lv, g, nullptr);
  converged = false;

  for (int iter = 0; iter < max_iters; ++iter) {
    ++iterations;
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(dof, dof);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dof);
    long n = 0;
    const ImagePlane& mov = *lv.mov;
    for (int r = m; r < h - m; ++r)
      for (int c = m; c < w - m; ++c) {
        const double xn = (c + 0.5 - lv.cx) / lv.scale;
        const double yn = (r + 0.5 - lv.cy) / lv.scale;
        const Eigen::Vector3d q = g * Eigen::Vector3d(xn, yn, 1.0);
        const double mx = q(0) / q(2) * lv.scale + lv.cx - 0.5;
        const double my = q(1) / q(2) * lv.scale + lv.cy - 0.5;
        if (mx < m || my < m || mx > mov.width() - 1 - m || my > mov.height() - 1 - m)
          continue;
        double value;
        if (!sample_bilinear(mov, 0, mx, my, value)) continue;
        const double e = value - ref.at(r, c);
        const Eigen::VectorXd& row = sd[static_cast<std::size_t>(r) * w + c];
        hess.noalias() += row * row.transpose();
        b.noalias() += row * e;
        ++n;
      }
    if (n < 4 * dof) break;  // not enough overlap to keep refining

    Eigen::VectorXd dp = hess.ldlt().solve(b);
    if (!dp.allFinite()) break;

    // Inverse-compositional update with step halving so the SSD never grows.
    bool accepted = false;
    for (int half = 0; half < 8; ++half) {
      const Eigen::Matrix3d incr = increment_matrix(dp, model);
      if (std::abs(incr.determinant()) < 1e-12) {
        dp *= 0.5;
        continue;
      }
      const Eigen::Matrix3d candidate = g * incr.inverse();
      const double candidate_ssd = level_ssd(lv, candidate, nullptr);
      if (candidate_ssd <= current_ssd) {
        g = candidate;
        current_ssd = candidate_ssd;
        accepted = true;
        break;
      }
      dp *= 0.5;
    }
    if (!accepted) break;
    if (dp.norm() < tol) {
      converged = true;
      break;
    }
  }
}

}  // namespace

RegistrationResult estimate_homography(const ImagePlane& ref,
                                       const ImagePlane& moving,
                                       const RegistrationOptions& opts) {
  if (ref.channels() != 1 || moving.channels() != 1)
    throw ShapeError("estimate_homography: single-channel inputs required");
  if (ref.height() != moving.height() || ref.width() != moving.width())
    throw ShapeError("estimate_homography: size mismatch");
  if (opts.levels < 1 || opts.max_iters < 1)
    throw ParamError("estimate_homography: levels and max_iters must be >= 1");

  auto intensity_std = [](const ImagePlane& img) {
    double mean = 0.0;
    for (double v : img.data()) mean += v;
    mean /= static_cast<double>(img.size());
    double var = 0.0;
    for (double v : img.data()) var += (v - mean) * (v - mean);
    return std::sqrt(var / static_cast<double>(img.size()));
  };
  if (intensity_std(ref) < 1e-10 || intensity_std(moving) < 1e-10)
    throw FlatImageError("estimate_homography: constant image");

  // Pyramids, coarsest level small enough to stay informative.
  std::vector<ImagePlane> ref_pyr{ref}, mov_pyr{moving};
  for (int k = 1; k < opts.levels; ++k) {
    if (ref_pyr.back().height() < 16 || ref_pyr.back().width() < 16) break;
    ref_pyr.push_back(downsample2(ref_pyr.back()));
    mov_pyr.push_back(downsample2(mov_pyr.back()));
  }

  // g maps normalized ref coords to normalized moving coords. Normalized
  // coordinates are shared across levels (pixel-center downsampling makes
  // x_pix(level k) = x_pix(level 0) / 2^k exactly for even sizes).
  Eigen::Matrix3d g = Eigen::Matrix3d::Identity();
  RegistrationResult result;

  for (int k = static_cast<int>(ref_pyr.size()) - 1; k >= 0; --k) {
    LevelData lv;
    lv.ref = &ref_pyr[k];
    lv.mov = &mov_pyr[k];
    lv.cx = ref_pyr[k].width() / 2.0;
    lv.cy = ref_pyr[k].height() / 2.0;
    lv.scale = std::max(ref_pyr[k].width(), ref_pyr[k].height()) / 2.0;
    lv.margin = std::max(1, static_cast<int>(std::lround(opts.border_margin / (1 << k))));
    bool level_converged = false;
    refine_level(lv, opts.model, opts.max_iters, opts.tol, g, level_converged,
                 result.iterations);
    if (k == 0) result.converged = level_converged;
  }

  // Back to pixel coordinates at full resolution, then to the spec's
  // convention: ref ~ warp(moving, h) means h^-1 maps ref -> moving, so
  // the returned homography is the inverse of the estimated forward map.
  LevelData lv0;
  lv0.ref = &ref;
  lv0.mov = &moving;
  lv0.cx = ref.width() / 2.0;
  lv0.cy = ref.height() / 2.0;
  lv0.scale = std::max(ref.width(), ref.height()) / 2.0;
  lv0.margin = std::max(1, static_cast<int>(std::lround(opts.border_margin)));
  result.initial_ssd = level_ssd(lv0, Eigen::Matrix3d::Identity(), nullptr);
  result.final_ssd = level_ssd(lv0, g, nullptr);

  Eigen::Matrix3d norm;
  norm << 1.0 / lv0.scale, 0, -lv0.cx / lv0.scale,
          0, 1.0 / lv0.scale, -lv0.cy / lv0.scale,
          0, 0, 1;
  const Eigen::Matrix3d g_pix = norm.inverse() * g * norm;
  result.h = from_eigen(g_pix.inverse());
  return result;
}

AlignResult align_burst(const Burst& burst, const RegistrationOptions& opts) {
  burst.validate();
  AlignResult out;
  out.trajectory.frames.resize(burst.size(), Homography::identity());
  out.frame_ok.assign(burst.size(), true);

  const ImagePlane ref_luma = luma(extract_channels(burst.frames[0]));
  for (int i = 1; i < burst.size(); ++i) {
    const ImagePlane mov_luma = luma(extract_channels(burst.frames[i]));
    try {
      RegistrationResult r = estimate_homography(ref_luma, mov_luma, opts);
      // Spec stores frame-i motion such that warp(gt, H_i) produced frame i;
      // estimate_homography returns h with ref ~ warp(moving, h), i.e.
      // h^-1 maps ref coords to moving coords, which is exactly H_i.
      out.trajectory.frames[i] = r.h.inverse();
      out.frame_ok[i] = true;
    } catch (const Error&) {
      out.frame_ok[i] = false;
      ++out.failed_count;
    }
  }
  return out;
}

double corner_error(const Homography& a, const Homography& b, int height,
                    int width) {
  const double xs[4] = {0.5, width - 0.5, 0.5, width - 0.5};
  const double ys[4] = {0.5, 0.5, height - 0.5, height - 0.5};
  double total = 0.0;
  for (int k = 0; k < 4; ++k) {
    double ax, ay, bx, by;
    a.apply(xs[k], ys[k], ax, ay);
    b.apply(xs[k], ys[k], bx, by);
    total += std::hypot(ax - bx, ay - by);
  }
  return total / 4.0;
}

}  // namespace burstlab
