#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "burstlab/spectral.hpp"
#include "test_util.hpp"

using namespace burstlab;
using namespace testutil;

TEST_CASE("fft2 of a delta has flat modulus 1/n") {
  ImagePlane delta(8, 8, 1);
  delta.at(0, 0) = 1.0;
  Spectrum s = fft2(delta);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c)
      CHECK(std::abs(std::abs(s.at(r, c)) - 0.125) < 1e-14);
}

TEST_CASE("fft2 matches the textbook DFT including centering") {
  for (auto [h, w] : {std::pair{8, 8}, std::pair{5, 6}, std::pair{7, 9}}) {
    ImagePlane img = random_image(h, w, 1, 42 + h * 10 + w);
    Spectrum s = fft2(img);
    auto oracle = naive_dft2(img);
    double worst = 0.0;
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c)
        worst = std::max(worst,
                         std::abs(s.at(r, c) - oracle[static_cast<std::size_t>(r) * w + c]));
    CHECK(worst < 1e-11);
  }
}

TEST_CASE("ifft2 inverts fft2 to 1e-12, odd sizes included") {
  for (auto [h, w] : {std::pair{16, 16}, std::pair{7, 9}}) {
    ImagePlane img = random_image(h, w, 1, 7);
    ImagePlane back = ifft2(fft2(img));
    CHECK(max_abs_diff(img, back) < 1e-12);
  }
}

TEST_CASE("unitarity: Parseval") {
  ImagePlane img = random_image(16, 16, 1, 3);
  Spectrum s = fft2(img);
  double pixel_energy = 0.0, spectral_energy = 0.0;
  for (double v : img.data()) pixel_energy += v * v;
  for (const auto& v : s.coef()) spectral_energy += std::norm(v);
  CHECK(std::abs(pixel_energy - spectral_energy) < 1e-10);
}

TEST_CASE("make_mask reproduces the published operating point") {
  RadialMask mask = make_mask(16, 16, 0.8, 0.2, 4.0);
  CHECK(mask.gains.at_frequency(0, 0) == 0.2);  // exact: the radial term is 0
  // R = 8 on a 16x16 grid: (u,v) = (-R, 0) evaluates the pure-alpha point.
  const double expected = std::pow(0.8, 8) + 0.2;
  CHECK(std::abs(mask.gains.at_frequency(-8, 0) - expected) < 1e-12);
  CHECK(mask.gains.at_frequency(-8, -8) == 1.0);  // clipped corner
  for (double v : mask.gains.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("make_mask with beta above one clips at DC") {
  RadialMask mask = make_mask(8, 8, 0.8, 1.5, 4.0);
  CHECK(mask.gains.at_frequency(0, 0) == 1.0);
}

TEST_CASE("mask is radially symmetric under frequency negation") {
  for (int n : {8, 9, 16}) {
    RadialMask mask = make_mask(n, n, 0.8, 0.2, 4.0);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        const int mr = (((n - (r - n / 2)) % n + n) % n + n / 2) % n;
        const int mc = (((n - (c - n / 2)) % n + n) % n + n / 2) % n;
        CHECK(std::abs(mask.gains.at(r, c) - mask.gains.at(mr, mc)) <= 1e-15);
      }
  }
}

TEST_CASE("make_mask rejects bad parameters") {
  CHECK_THROWS_AS(make_mask(8, 8, 0.8, 0.2, 0.0), ParamError);
  CHECK_THROWS_AS(make_mask(8, 8, 0.8, 0.2, -1.0), ParamError);
  CHECK_THROWS_AS(make_mask(8, 8, 0.8, -0.1, 4.0), ParamError);
}

TEST_CASE("high projection of a constant image is beta times the constant") {
  ImagePlane img(16, 16, 1, 0.7);
  SUBCASE("beta zero kills DC entirely") {
    RadialMask mask = make_mask(16, 16, 0.8, 0.0, 4.0);
    ImagePlane high = project(img, mask, ProjectionBand::kHigh);
    CHECK(rms(high) < 1e-12);
  }
  SUBCASE("paper mask passes 0.2 of DC") {
    RadialMask mask = make_mask(16, 16, 0.8, 0.2, 4.0);
    ImagePlane high = project(img, mask, ProjectionBand::kHigh);
    for (double v : high.data()) CHECK(std::abs(v - 0.2 * 0.7) < 1e-12);
  }
}

TEST_CASE("cosines are eigenfunctions of the projector") {
  const int n = 16;
  RadialMask mask = make_mask(n, n, 0.8, 0.2, 4.0);
  ImagePlane img(n, n, 1);
  const int u0 = 6;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      img.at(r, c) = std::cos(2.0 * M_PI * u0 * c / n);

  ImagePlane high = project(img, mask, ProjectionBand::kHigh);
  const double gain = mask.gains.at_frequency(u0, 0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      CHECK(std::abs(high.at(r, c) - gain * img.at(r, c)) < 1e-10);

  // Same result through the dense DFT route.
  auto spec = naive_dft2(img);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      spec[static_cast<std::size_t>(r) * n + c] *= mask.gains.at(r, c);
  ImagePlane oracle = naive_idft2(spec, n, n);
  CHECK(max_abs_diff(high, oracle) < 1e-10);
}

TEST_CASE("complementarity: high plus low reproduces the image") {
  RadialMask mask = make_mask(32, 32, 0.8, 0.2, 4.0);
  for (int k = 0; k < 10; ++k) {
    ImagePlane img = random_image(32, 32, 3, 100 + k);
    ImagePlane sum = project(img, mask, ProjectionBand::kHigh) +
                     project(img, mask, ProjectionBand::kLow);
    CHECK(max_abs_diff(img, sum) < 1e-10);
  }
}

TEST_CASE("per-bin gain identity |F(P_H x)| = h |F(x)|") {
  const int n = 16;
  RadialMask mask = make_mask(n, n, 0.8, 0.2, 4.0);
  ImagePlane img = random_image(n, n, 1, 5);
  Spectrum before = fft2(img);
  Spectrum after = fft2(project(img, mask, ProjectionBand::kHigh));
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      CHECK(std::abs(std::abs(after.at(r, c)) -
                     mask.gains.at(r, c) * std::abs(before.at(r, c))) < 1e-10);
}

TEST_CASE("project is linear in the image") {
  RadialMask mask = make_mask(16, 16, 0.8, 0.2, 4.0);
  ImagePlane x = random_image(16, 16, 1, 8);
  ImagePlane y = random_image(16, 16, 1, 9);
  ImagePlane combined = 2.0 * x + (-0.5) * y;
  ImagePlane lhs = project(combined, mask, ProjectionBand::kHigh);
  ImagePlane rhs = 2.0 * project(x, mask, ProjectionBand::kHigh) +
                   (-0.5) * project(y, mask, ProjectionBand::kHigh);
  CHECK(max_abs_diff(lhs, rhs) < 1e-12);
}

TEST_CASE("project rejects mismatched grids") {
  RadialMask mask = make_mask(8, 8, 0.8, 0.2, 4.0);
  ImagePlane img = random_image(16, 16, 1, 1);
  CHECK_THROWS_AS(project(img, mask, ProjectionBand::kHigh), ShapeError);
}

TEST_CASE("binary masks") {
  RadialMask soft = make_mask(16, 16, 0.8, 0.2, 4.0);
  RadialMask binary = binary_mask_from(soft, 0.5);
  CHECK(binary.gains.at_frequency(0, 0) == 0.0);  // 0.2 < 0.5
  CHECK(binary.gains.is_binary());

  SUBCASE("all-ones soft mask maps to all-ones binary mask") {
    RadialMask ones = soft;
    for (double& v : ones.gains.values) v = 1.0;
    RadialMask b = binary_mask_from(ones, 0.5);
    for (double v : b.gains.values) CHECK(v == 1.0);
  }

  SUBCASE("threshold sweep is pointwise monotone") {
    RadialMask lo = binary_mask_from(soft, 0.3);
    RadialMask hi = binary_mask_from(soft, 0.7);
    for (std::size_t i = 0; i < lo.gains.values.size(); ++i)
      CHECK(hi.gains.values[i] <= lo.gains.values[i]);
  }

  SUBCASE("binary projectors are idempotent") {
    ImagePlane img = random_image(16, 16, 1, 77);
    ImagePlane once = project(img, binary, ProjectionBand::kHigh);
    ImagePlane twice = project(once, binary, ProjectionBand::kHigh);
    CHECK(max_abs_diff(once, twice) < 1e-10);
  }

  SUBCASE("threshold domain") {
    CHECK_THROWS_AS(binary_mask_from(soft, 0.0), ParamError);
    CHECK_THROWS_AS(binary_mask_from(soft, 1.0), ParamError);
  }
}

TEST_CASE("log_spectrum") {
  SUBCASE("delta gives a constant field") {
    ImagePlane delta(8, 8, 1);
    delta.at(0, 0) = 1.0;
    ImagePlane ls = log_spectrum(delta);
    const double expected = std::log1p(0.125);
    for (double v : ls.data()) CHECK(std::abs(v - expected) < 1e-12);
  }
  SUBCASE("zero image gives zero") {
    ImagePlane zero(8, 8, 1);
    ImagePlane ls = log_spectrum(zero);
    for (double v : ls.data()) CHECK(v == 0.0);
  }
  SUBCASE("band-limited image has strictly lower high-band log energy") {
    const int n = 32;
    ImagePlane hr = random_image(n, n, 1, 11);
    RadialMask binary = binary_mask_from(make_mask(n, n, 0.8, 0.2, 4.0), 0.3);
    ImagePlane upsampled_like = project(hr, binary, ProjectionBand::kLow);
    ImagePlane ls_hr = log_spectrum(hr);
    ImagePlane ls_lr = log_spectrum(upsampled_like);
    double hi_hr = 0.0, hi_lr = 0.0;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        if (binary.gains.at(r, c) == 1.0) {
          hi_hr += ls_hr.at(r, c);
          hi_lr += ls_lr.at(r, c);
        }
    CHECK(hi_lr < hi_hr);
  }
}
