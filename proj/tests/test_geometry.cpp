#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "burstlab/geometry.hpp"
#include "burstlab/raw_sensor.hpp"
#include "test_util.hpp"

using namespace burstlab;
using namespace testutil;

namespace {

Homography small_rotation(double degrees, double cx, double cy) {
  const double t = degrees * M_PI / 180.0;
  Homography r;
  r.at(0, 0) = std::cos(t);
  r.at(0, 1) = -std::sin(t);
  r.at(1, 0) = std::sin(t);
  r.at(1, 1) = std::cos(t);
  const Homography c = Homography::translation(cx, cy);
  return (c * r * c.inverse()).normalized();
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("burstlab_geom_" + name);
}

}  // namespace

TEST_CASE("homography algebra") {
  Homography h = Homography::translation(3.0, -2.0);
  SUBCASE("normalization is idempotent and scale-invariant") {
    Homography scaled = h;
    for (double& v : scaled.m) v *= 7.5;
    Homography n1 = scaled.normalized();
    Homography n2 = n1.normalized();
    for (int i = 0; i < 9; ++i) {
      CHECK(n1.m[i] == doctest::Approx(h.m[i]).epsilon(1e-15));
      CHECK(n1.m[i] == n2.m[i]);
    }
  }
  SUBCASE("inverse composes to the identity") {
    Homography r = small_rotation(10.0, 4.0, 4.0);
    Homography prod = r * r.inverse();
    CHECK(prod.is_identity(1e-12));
  }
  SUBCASE("singular matrices are rejected") {
    Homography s;
    s.m = {1, 0, 0, 2, 0, 0, 0, 0, 1};  // rank deficient
    CHECK_THROWS_AS(s.inverse(), NumericError);
  }
}

TEST_CASE("warp with the identity is bit-exact with full validity") {
  ImagePlane img = random_image(8, 10, 3, 5);
  WarpResult out = warp(img, Homography::identity());
  CHECK(out.image.data() == img.data());
  CHECK(out.validity.true_fraction() == 1.0);
}

TEST_CASE("pure integer translation shifts pixels exactly") {
  ImagePlane img = random_image(8, 8, 1, 6);
  WarpResult out = warp(img, Homography::translation(2.0, 0.0));
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) {
      if (c >= 2) {
        CHECK(out.image.at(r, c) == img.at(r, c - 2));
        CHECK(out.validity.at(r, c));
      } else {
        CHECK(out.image.at(r, c) == 0.0);
        CHECK_FALSE(out.validity.at(r, c));
      }
    }
}

TEST_CASE("warp composition matches composed homographies on the interior") {
  ImagePlane img = smooth_scene(64, 64, 1, 9, 0.04, 0.35);
  Homography h1 = Homography::translation(1.3, -0.6);
  Homography h2 = small_rotation(1.5, 32.0, 32.0);
  ImagePlane two_step = warp(warp(img, h1).image, h2).image;
  ImagePlane one_step = warp(img, (h2 * h1).normalized()).image;
  double acc = 0.0;
  long n = 0;
  for (int r = 8; r < 56; ++r)
    for (int c = 8; c < 56; ++c) {
      const double d = two_step.at(r, c) - one_step.at(r, c);
      acc += d * d;
      ++n;
    }
  CHECK(std::sqrt(acc / n) < 1e-2);
}

TEST_CASE("warp is linear in the image on the valid region") {
  ImagePlane x = random_image(16, 16, 1, 10);
  ImagePlane y = random_image(16, 16, 1, 11);
  Homography h = small_rotation(3.0, 8.0, 8.0);
  WarpResult wx = warp(x, h);
  WarpResult wy = warp(y, h);
  WarpResult wc = warp(1.5 * x + (-0.25) * y, h);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c)
      if (wc.validity.at(r, c))
        CHECK(std::abs(wc.image.at(r, c) -
                       (1.5 * wx.image.at(r, c) - 0.25 * wy.image.at(r, c))) <
              1e-12);
}

TEST_CASE("warp rejects singular homographies") {
  Homography s;
  s.m = {0, 0, 0, 0, 0, 0, 0, 0, 1};
  CHECK_THROWS_AS(warp(ImagePlane(4, 4, 1), s), NumericError);
}

TEST_CASE("synth_trajectory") {
  SUBCASE("zero magnitude gives identities") {
    Trajectory t = synth_trajectory(5, 0.0, 0.9, 1);
    for (const Homography& h : t.frames) CHECK(h.is_identity());
  }
  SUBCASE("paper burst length") {
    CHECK(synth_trajectory(11, 2.0, 0.9, 2).size() == 11);
  }
  SUBCASE("fixed seed is deterministic") {
    Trajectory a = synth_trajectory(7, 2.0, 0.9, 3);
    Trajectory b = synth_trajectory(7, 2.0, 0.9, 3);
    for (int i = 0; i < 7; ++i) CHECK(a.frames[i].m == b.frames[i].m);
  }
  SUBCASE("frame zero pinned to the identity") {
    Trajectory t = synth_trajectory(4, 2.0, 0.9, 4);
    CHECK(t.frames[0].is_identity());
  }
  SUBCASE("lag-1 autocorrelation of translations approaches rho") {
    // Pooled over many trajectories; the process is stationary by design.
    const int n_traj = 10000, len = 11;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (int k = 0; k < n_traj; ++k) {
      Trajectory t = synth_trajectory(len, 2.0, 0.9, 1000 + k);
      for (int i = 1; i + 1 < len; ++i) {
        const double x = t.frames[i].at(0, 2);
        const double y = t.frames[i + 1].at(0, 2);
        sxy += x * y;
        sxx += x * x;
        syy += y * y;
      }
    }
    const double corr = sxy / std::sqrt(sxx * syy);
    CHECK(std::abs(corr - 0.9) < 0.05);
  }
  SUBCASE("translation std matches the magnitude") {
    const int n_traj = 4000, len = 11;
    double acc = 0.0;
    long n = 0;
    for (int k = 0; k < n_traj; ++k) {
      Trajectory t = synth_trajectory(len, 2.0, 0.9, 5000 + k);
      for (int i = 1; i < len; ++i) {
        acc += t.frames[i].at(0, 2) * t.frames[i].at(0, 2);
        ++n;
      }
    }
    CHECK(std::sqrt(acc / n) == doctest::Approx(2.0).epsilon(0.1));
  }
  SUBCASE("smoothness domain") {
    CHECK_THROWS_AS(synth_trajectory(3, 1.0, 1.0, 0), ParamError);
    CHECK_THROWS_AS(synth_trajectory(0, 1.0, 0.5, 0), ParamError);
  }
}

TEST_CASE("trajectory save/load round trip") {
  Trajectory t = synth_trajectory(6, 1.5, 0.8, 42);
  const auto path = temp_path("traj.json");
  save_trajectory(t, path);
  Trajectory back = load_trajectory(path);
  REQUIRE(back.size() == t.size());
  for (int i = 0; i < t.size(); ++i)
    for (int k = 0; k < 9; ++k)
      CHECK(std::abs(back.frames[i].m[k] - t.frames[i].m[k]) < 1e-15);
  std::filesystem::remove(path);
}

TEST_CASE("trajectory loader rejects contract violations") {
  const auto path = temp_path("bad.json");
  auto write = [&](const std::string& text) {
    std::ofstream out(path);
    out << text;
  };

  SUBCASE("malformed JSON") {
    write("{nope");
    CHECK_THROWS_AS(load_trajectory(path), FormatError);
  }
  SUBCASE("first matrix not the identity") {
    write(R"({"frames": [[[1,0,3],[0,1,0],[0,0,1]]]})");
    CHECK_THROWS_AS(load_trajectory(path), FormatError);
  }
  SUBCASE("empty list") {
    write(R"({"frames": []})");
    CHECK_THROWS_AS(load_trajectory(path), FormatError);
  }
  SUBCASE("non-invertible matrix") {
    write(R"({"frames": [[[1,0,0],[0,1,0],[0,0,1]],
                          [[1,0,0],[2,0,0],[0,0,1]]]})");
    CHECK_THROWS_AS(load_trajectory(path), FormatError);
  }
  std::filesystem::remove(path);
}

TEST_CASE("estimate_homography") {
  const ImagePlane ref = smooth_scene(96, 96, 1, 13, 0.05, 0.35);

  SUBCASE("self-alignment returns the identity") {
    RegistrationResult r = estimate_homography(ref, ref);
    CHECK(corner_error(r.h, Homography::identity(), 96, 96) < 1e-3);
    CHECK(r.final_ssd <= r.initial_ssd);
  }
  SUBCASE("sub-pixel translation is recovered within 0.1 px") {
    // moving = warp(ref, T) shows ref(T^-1 p); the h with warp(moving, h)
    // equal to ref is therefore T^-1.
    const Homography truth = Homography::translation(1.5, -0.7);
    const ImagePlane moving = warp(ref, truth).image;
    RegistrationOptions opts;
    opts.model = MotionModel::kTranslation;
    RegistrationResult r = estimate_homography(ref, moving, opts);
    CHECK(std::abs(r.h.at(0, 2) - (-1.5)) < 0.1);
    CHECK(std::abs(r.h.at(1, 2) - 0.7) < 0.1);
    CHECK(r.final_ssd <= r.initial_ssd);
  }
  SUBCASE("small rotation recovered within 0.2 px corner error") {
    const Homography truth = small_rotation(0.5, 48.0, 48.0);
    const ImagePlane moving = warp(ref, truth).image;
    RegistrationResult r = estimate_homography(ref, moving);
    CHECK(corner_error(r.h, truth.inverse(), 96, 96) < 0.2);
  }
  SUBCASE("constant images raise a flat-image error") {
    ImagePlane flat(96, 96, 1, 0.5);
    CHECK_THROWS_AS(estimate_homography(flat, ref), FlatImageError);
    CHECK_THROWS_AS(estimate_homography(ref, flat), FlatImageError);
  }
  SUBCASE("multi-channel input is rejected") {
    CHECK_THROWS_AS(estimate_homography(ImagePlane(8, 8, 3), ImagePlane(8, 8, 3)),
                    ShapeError);
  }
}

TEST_CASE("align_burst") {
  const ImagePlane scene = smooth_scene(64, 64, 3, 17, 0.05, 0.3);

  auto burst_from_trajectory = [&](const Trajectory& t) {
    Burst burst;
    burst.trajectory = t;
    for (int i = 0; i < t.size(); ++i) {
      const ImagePlane view =
          t.frames[i].is_identity() ? scene : warp(scene, t.frames[i]).image;
      burst.frames.push_back(mosaic(view, CfaPattern::kRggb));
    }
    return burst;
  };

  SUBCASE("identical frames align to identities") {
    Trajectory t;
    t.frames.assign(3, Homography::identity());
    AlignResult out = align_burst(burst_from_trajectory(t));
    CHECK(out.failed_count == 0);
    for (const Homography& h : out.trajectory.frames)
      CHECK(corner_error(h, Homography::identity(), 64, 64) < 1e-3);
  }
  SUBCASE("known trajectory recovered within 0.15 px mean corner error") {
    Trajectory t;
    t.frames.push_back(Homography::identity());
    t.frames.push_back(Homography::translation(1.0, -1.5));
    t.frames.push_back(small_rotation(0.4, 32.0, 32.0));
    t.frames.push_back(
        (Homography::translation(-0.7, 0.3) * small_rotation(-0.3, 32, 32))
            .normalized());
    AlignResult out = align_burst(burst_from_trajectory(t));
    REQUIRE(out.failed_count == 0);
    for (int i = 0; i < t.size(); ++i)
      CHECK(corner_error(out.trajectory.frames[i], t.frames[i], 64, 64) < 0.15);
  }
  SUBCASE("a constant frame is flagged, the rest recovered") {
    Trajectory t;
    t.frames.push_back(Homography::identity());
    t.frames.push_back(Homography::translation(1.0, 0.5));
    t.frames.push_back(Homography::identity());
    Burst burst = burst_from_trajectory(t);
    for (double& v : burst.frames[2].data) v = 0.25;
    AlignResult out = align_burst(burst);
    CHECK(out.failed_count == 1);
    CHECK_FALSE(out.frame_ok[2]);
    CHECK(out.frame_ok[1]);
    CHECK(corner_error(out.trajectory.frames[1], t.frames[1], 64, 64) < 0.15);
  }
}
