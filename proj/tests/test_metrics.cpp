#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "burstlab/metrics.hpp"
#include "test_util.hpp"

using namespace burstlab;
using namespace testutil;

TEST_CASE("psnr") {
  ImagePlane a = random_image(16, 16, 3, 1);

  SUBCASE("identical images are infinite, capped in reports") {
    CHECK(std::isinf(psnr(a, a)));
    MetricReport report =
        metric_report(a, a, make_mask(16, 16, 0.8, 0.2, 4.0));
    CHECK(report.psnr_infinite);
    CHECK(report.psnr == 99.0);
  }
  SUBCASE("constant difference of 0.1 is exactly 20 dB") {
    ImagePlane b = a;
    for (double& v : b.data()) v += 0.1;
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));
  }
  SUBCASE("masked region changes the MSE accordingly") {
    ImagePlane b = random_image(16, 16, 3, 2);
    Mask mask(16, 16, false);
    for (int r = 4; r < 12; ++r)
      for (int c = 4; c < 12; ++c) mask.set(r, c, true);
    double acc = 0.0;
    long n = 0;
    for (int r = 4; r < 12; ++r)
      for (int c = 4; c < 12; ++c)
        for (int ch = 0; ch < 3; ++ch) {
          const double d = a.at(r, c, ch) - b.at(r, c, ch);
          acc += d * d;
          ++n;
        }
    const double expected = 10.0 * std::log10(1.0 / (acc / n));
    CHECK(psnr(a, b, 1.0, &mask) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(psnr(a, b) != doctest::Approx(expected).epsilon(1e-6));
  }
  SUBCASE("symmetry and constant-offset invariance") {
    ImagePlane b = random_image(16, 16, 3, 3);
    CHECK(psnr(a, b) == psnr(b, a));
    ImagePlane a2 = a, b2 = b;
    for (double& v : a2.data()) v += 0.2;
    for (double& v : b2.data()) v += 0.2;
    CHECK(psnr(a2, b2) == doctest::Approx(psnr(a, b)).epsilon(1e-12));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(psnr(a, ImagePlane(8, 8, 3)), ShapeError);
    Mask empty(16, 16, false);
    ImagePlane b = random_image(16, 16, 3, 4);
    CHECK_THROWS_AS(psnr(a, b, 1.0, &empty), ShapeError);
  }
}

TEST_CASE("ssim") {
  SUBCASE("identical images score exactly 1") {
    ImagePlane a = random_image(32, 32, 1, 5);
    CHECK(ssim(a, a) == 1.0);
  }
  SUBCASE("anti-correlated binary images score below zero") {
    ImagePlane a(32, 32, 1);
    for (int r = 0; r < 32; ++r)
      for (int c = 0; c < 32; ++c) a.at(r, c) = (r + c) % 2;
    ImagePlane b = a;
    for (double& v : b.data()) v = 1.0 - v;
    CHECK(ssim(a, b) < 0.0);
  }
  SUBCASE("constant fields follow the luminance-only closed form") {
    ImagePlane a(16, 16, 1, 0.3);
    ImagePlane b(16, 16, 1, 0.5);
    const double c1 = 0.01 * 0.01;
    const double expected = (2 * 0.3 * 0.5 + c1) / (0.3 * 0.3 + 0.5 * 0.5 + c1);
    CHECK(ssim(a, b) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("symmetry") {
    ImagePlane a = random_image(24, 24, 1, 6);
    ImagePlane b = random_image(24, 24, 1, 7);
    CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
  }
  SUBCASE("window larger than the image") {
    CHECK_THROWS_AS(ssim(ImagePlane(4, 4, 1), ImagePlane(4, 4, 1)),
                    DimensionError);
  }
}

TEST_CASE("band_error") {
  const int n = 16;
  ImagePlane a = random_image(n, n, 1, 8);

  SUBCASE("equal images give zero in both bands") {
    RadialMask mask = make_mask(n, n, 0.8, 0.2, 4.0);
    BandError e = band_error(a, a, mask);
    CHECK(e.lowband_rmse == 0.0);
    CHECK(e.highband_rmse == 0.0);
  }
  SUBCASE("constant offset lands entirely in the low band") {
    RadialMask binary = binary_mask_from(make_mask(n, n, 0.8, 0.2, 4.0), 0.5);
    REQUIRE(binary.gains.at_frequency(0, 0) == 0.0);
    ImagePlane b = a;
    for (double& v : b.data()) v += 0.37;
    BandError e = band_error(a, b, binary);
    CHECK(e.lowband_rmse == doctest::Approx(0.37).epsilon(1e-12));
    CHECK(e.highband_rmse < 1e-12);
  }
  SUBCASE("a pure high-band cosine lands in the high band at amplitude/sqrt(2)") {
    // threshold 0.21 puts bin (6,0) in the high band while DC stays low
    RadialMask binary = binary_mask_from(make_mask(n, n, 0.8, 0.2, 4.0), 0.21);
    REQUIRE(binary.gains.at_frequency(6, 0) == 1.0);
    REQUIRE(binary.gains.at_frequency(0, 0) == 0.0);
    const double amplitude = 0.25;
    ImagePlane b = a;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        b.at(r, c) += amplitude * std::cos(2.0 * M_PI * 6.0 * c / n);
    BandError e = band_error(a, b, binary);
    CHECK(e.lowband_rmse < 1e-12);
    CHECK(e.highband_rmse ==
          doctest::Approx(amplitude / std::sqrt(2.0)).epsilon(1e-12));
  }
  SUBCASE("binary masks satisfy the Parseval split") {
    RadialMask binary = binary_mask_from(make_mask(n, n, 0.8, 0.2, 4.0), 0.3);
    ImagePlane b = random_image(n, n, 1, 9);
    BandError e = band_error(a, b, binary);  // internal assert must hold
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a.data()[i] - b.data()[i];
      mse += d * d;
    }
    mse /= a.size();
    CHECK(e.lowband_rmse * e.lowband_rmse + e.highband_rmse * e.highband_rmse ==
          doctest::Approx(mse).epsilon(1e-10));
  }
  SUBCASE("constant-offset invariance") {
    RadialMask mask = make_mask(n, n, 0.8, 0.2, 4.0);
    ImagePlane b = random_image(n, n, 1, 10);
    BandError e1 = band_error(a, b, mask);
    ImagePlane a2 = a, b2 = b;
    for (double& v : a2.data()) v += 0.1;
    for (double& v : b2.data()) v += 0.1;
    BandError e2 = band_error(a2, b2, mask);
    CHECK(e1.lowband_rmse == doctest::Approx(e2.lowband_rmse).epsilon(1e-10));
    CHECK(e1.highband_rmse == doctest::Approx(e2.highband_rmse).epsilon(1e-10));
  }
  SUBCASE("shape mismatch") {
    RadialMask mask = make_mask(n, n, 0.8, 0.2, 4.0);
    CHECK_THROWS_AS(band_error(a, ImagePlane(8, 8, 1), mask), ShapeError);
  }
}

TEST_CASE("metric_report serializes to JSON") {
  ImagePlane a = random_image(16, 16, 1, 11);
  ImagePlane b = random_image(16, 16, 1, 12);
  MetricReport report = metric_report(a, b, make_mask(16, 16, 0.8, 0.2, 4.0));
  const std::string json = report.to_json();
  CHECK(json.find("\"psnr\"") != std::string::npos);
  CHECK(json.find("\"ssim\"") != std::string::npos);
  CHECK(json.find("\"lowband_rmse\"") != std::string::npos);
  CHECK(report.valid_fraction == 1.0);
}
