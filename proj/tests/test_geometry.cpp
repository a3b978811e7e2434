#include "ageus/geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace ageus;

namespace {

std::vector<PointRC> ellipse_points(double crow, double ccol, double a, double b, double theta,
                                    int n) {
  std::vector<PointRC> pts;
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * M_PI * i / n;
    const double x = a * std::cos(t), y = b * std::sin(t);
    pts.push_back({crow + x * std::sin(theta) + y * std::cos(theta),
                   ccol + x * std::cos(theta) - y * std::sin(theta)});
  }
  return pts;
}

SegmentationMask disk_mask(int size, double crow, double ccol, double ra, double rb) {
  SegmentationMask m;
  m.pixels = Grid::zeros(size, size);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c)
      if (std::pow((r - crow) / ra, 2) + std::pow((c - ccol) / rb, 2) <= 1.0) m.pixels(r, c) = 1.0;
  return m;
}

}  // namespace

TEST_CASE("extract_contour of a 5x5 square has 16 boundary points") {
  SegmentationMask m;
  m.pixels = Grid::zeros(20, 20);
  for (int r = 7; r < 12; ++r)
    for (int c = 3; c < 8; ++c) m.pixels(r, c) = 1.0;
  const auto contour = extract_contour(m);
  CHECK(contour.size() == 16);
  for (const auto& p : contour) {
    CHECK(p.row >= 7.0);
    CHECK(p.row <= 11.0);
    CHECK(p.col >= 3.0);
    CHECK(p.col <= 7.0);
  }
}

TEST_CASE("extract_contour of a full-frame mask is the border rectangle") {
  SegmentationMask m;
  m.pixels = Grid::ones(12, 16);
  const auto contour = extract_contour(m);
  for (const auto& p : contour)
    CHECK((p.row == 0.0 || p.row == 11.0 || p.col == 0.0 || p.col == 15.0));
  CHECK(contour.size() >= 6);
}

TEST_CASE("extract_contour keeps only the largest component") {
  SegmentationMask m;
  m.pixels = Grid::zeros(64, 64);
  for (int r = 10; r < 30; ++r)
    for (int c = 10; c < 30; ++c) m.pixels(r, c) = 1.0;  // 400 px
  for (int r = 50; r < 56; ++r)
    for (int c = 50; c < 55; ++c) m.pixels(r, c) = 1.0;  // 30 px
  const auto contour = extract_contour(m);
  for (const auto& p : contour) {
    CHECK(p.row < 40.0);
    CHECK(p.col < 40.0);
  }
}

TEST_CASE("extract_contour error paths") {
  SegmentationMask empty;
  empty.pixels = Grid::zeros(16, 16);
  CHECK_THROWS_WITH_AS(extract_contour(empty), "no structure found", std::runtime_error);

  SegmentationMask tiny;
  tiny.pixels = Grid::zeros(16, 16);
  tiny.pixels(4, 4) = 1.0;
  tiny.pixels(4, 5) = 1.0;
  CHECK_THROWS_WITH_AS(extract_contour(tiny), "structure too small", std::runtime_error);
}

TEST_CASE("fit_ellipse recovers exact points to 1e-6 relative") {
  const auto pts = ellipse_points(50, 60, 30, 20, 0.4, 100);
  const auto e = fit_ellipse(pts);
  CHECK(std::abs(e.center.row - 50.0) / 50.0 < 1e-6);
  CHECK(std::abs(e.center.col - 60.0) / 60.0 < 1e-6);
  CHECK(std::abs(e.semi_major - 30.0) / 30.0 < 1e-6);
  CHECK(std::abs(e.semi_minor - 20.0) / 20.0 < 1e-6);
  CHECK(std::abs(e.rotation - 0.4) < 1e-6);
}

TEST_CASE("fit_ellipse circle case") {
  const auto pts = ellipse_points(40, 40, 25, 25, 0.0, 64);
  const auto e = fit_ellipse(pts);
  CHECK(e.semi_major == doctest::Approx(25.0).epsilon(1e-6));
  CHECK(e.semi_minor == doctest::Approx(25.0).epsilon(1e-6));
  CHECK(e.rotation >= 0.0);
  CHECK(e.rotation < M_PI);
}

TEST_CASE("fit_ellipse rejects collinear points") {
  std::vector<PointRC> pts;
  for (int i = 0; i < 12; ++i) pts.push_back({2.0 * i, 3.0 * i + 1.0});
  CHECK_THROWS_WITH_AS(fit_ellipse(pts), "degenerate conic", std::runtime_error);
}

TEST_CASE("fit_ellipse noisy points match a geometric least-squares oracle") {
  // 40 points from ellipse center (row 50, col 60), a=30, b=20, theta=0.4,
  // Gaussian coordinate noise sigma=0.5. The reference parameters below come
  // from an independent geometric-distance Levenberg-Marquardt fit of the
  // same frozen points.
  const double xs[40] = {87.784188, 85.553275, 84.24792,  81.554578, 76.801215, 73.380357,
                         70.004581, 65.446981, 61.123127, 56.203569, 52.651332, 48.373846,
                         44.087133, 41.079547, 37.691251, 34.524493, 33.251868, 31.364573,
                         31.753056, 31.465032, 32.275739, 33.586268, 36.738577, 38.838439,
                         42.009103, 45.792486, 50.325494, 54.577619, 59.074838, 63.585319,
                         68.859191, 71.811842, 75.689761, 79.077188, 82.850493, 85.610347,
                         86.875533, 87.735907, 88.273929, 88.835302};
  const double ys[40] = {62.054177, 64.69201,  66.470481, 68.888368, 70.337446, 71.395924,
                         72.205625, 71.828992, 71.469185, 70.055767, 68.56578,  66.682515,
                         63.180937, 60.949825, 57.801063, 54.44552,  51.238769, 48.701301,
                         44.148789, 41.827134, 37.476015, 35.412125, 33.278141, 31.520824,
                         30.07651,  29.110094, 28.055727, 28.05163,  29.29926,  29.88237,
                         30.940937, 33.066486, 35.630759, 39.13892,  42.034964, 45.580284,
                         48.410034, 52.12544,  55.731091, 58.502332};
  const double oracle_ccol = 60.05881359676714, oracle_crow = 49.984845821504315;
  const double oracle_a = 29.964537353347787, oracle_b = 20.06437933394383;
  const double oracle_theta = 0.40338262657682616;

  std::vector<PointRC> pts;
  for (int i = 0; i < 40; ++i) pts.push_back({ys[i], xs[i]});
  const auto e = fit_ellipse(pts);
  CHECK(std::abs(e.semi_major - oracle_a) / oracle_a < 0.02);
  CHECK(std::abs(e.semi_minor - oracle_b) / oracle_b < 0.02);
  CHECK(std::abs(e.center.row - oracle_crow) < 0.5);
  CHECK(std::abs(e.center.col - oracle_ccol) < 0.5);
  CHECK(std::abs(e.rotation - oracle_theta) < 0.02);
}

TEST_CASE("fit_ellipse invariance under cyclic reorder and translation") {
  auto pts = ellipse_points(50, 60, 30, 20, 0.7, 48);
  const auto e0 = fit_ellipse(pts);
  std::rotate(pts.begin(), pts.begin() + 17, pts.end());
  const auto e1 = fit_ellipse(pts);
  CHECK(std::abs(e0.semi_major - e1.semi_major) < 1e-9);
  CHECK(std::abs(e0.semi_minor - e1.semi_minor) < 1e-9);
  CHECK(std::abs(e0.rotation - e1.rotation) < 1e-9);

  for (auto& p : pts) {
    p.row += 11.5;
    p.col -= 3.25;
  }
  const auto e2 = fit_ellipse(pts);
  CHECK(std::abs(e2.center.row - (e0.center.row + 11.5)) < 1e-9);
  CHECK(std::abs(e2.center.col - (e0.center.col - 3.25)) < 1e-9);
  CHECK(std::abs(e2.semi_major - e0.semi_major) < 1e-9);
  CHECK(std::abs(e2.semi_minor - e0.semi_minor) < 1e-9);
  CHECK(std::abs(e2.rotation - e0.rotation) < 1e-9);
}

TEST_CASE("ellipse_perimeter circle and integration oracle values") {
  CHECK(ellipse_perimeter(10, 10) == doctest::Approx(62.83185307179586).epsilon(1e-9));
  // reference: adaptive quadrature of the arc-length integral
  CHECK(std::abs(ellipse_perimeter(10, 5) - 48.44224110273837) / 48.44224110273837 < 1e-4);
  CHECK(std::abs(ellipse_perimeter(10, 1e-9) - 40.0) / 40.0 < 1e-3);
}

TEST_CASE("ellipse_perimeter symmetry and monotonicity") {
  CHECK(ellipse_perimeter(7, 3) == doctest::Approx(ellipse_perimeter(3, 7)));
  CHECK(ellipse_perimeter(10.5, 6.5) > ellipse_perimeter(10, 6));
}

TEST_CASE("head_biometrics circle oracle") {
  const auto mask = disk_mask(256, 128, 128, 100, 100);
  const SpacingMm sp{0.3, 0.3};
  const auto hb = head_biometrics(mask, sp);
  CHECK(std::abs(hb.hc_cm - 18.850) / 18.850 < 0.01);
  CHECK(std::abs(hb.bpd_cm - 6.000) / 6.000 < 0.01);

  const auto hb2 = head_biometrics(mask, {0.15, 0.15});
  CHECK(hb2.hc_cm == doctest::Approx(hb.hc_cm / 2.0));
  CHECK(hb2.bpd_cm == doctest::Approx(hb.bpd_cm / 2.0));
}

TEST_CASE("abdomen_biometrics circle and ellipse oracles") {
  const auto circ = disk_mask(384, 192, 192, 150, 150);
  CHECK(std::abs(abdomen_biometrics(circ, {0.3, 0.3}).ac_cm - 28.274) / 28.274 < 0.01);

  const auto ell = disk_mask(400, 200, 200, 140, 160);  // row semi-axis 140, col 160
  const double expect = ellipse_perimeter(160, 140) * 0.03;
  CHECK(std::abs(abdomen_biometrics(ell, {0.3, 0.3}).ac_cm - expect) / expect < 0.01);

  SegmentationMask empty;
  empty.pixels = Grid::zeros(32, 32);
  CHECK_THROWS_WITH_AS(abdomen_biometrics(empty, {0.3, 0.3}), "no structure found",
                       std::runtime_error);
}

TEST_CASE("biometrics stable under 2x upsample with halved spacing") {
  const auto mask = disk_mask(128, 60, 66, 40, 50);
  const auto hb = head_biometrics(mask, {0.3, 0.3});
  SegmentationMask up;
  up.pixels = Grid::zeros(256, 256);
  for (int r = 0; r < 256; ++r)
    for (int c = 0; c < 256; ++c) up.pixels(r, c) = mask.pixels(r / 2, c / 2);
  const auto hb2 = head_biometrics(up, {0.15, 0.15});
  CHECK(std::abs(hb.hc_cm - hb2.hc_cm) / hb.hc_cm < 0.01);
  CHECK(std::abs(hb.bpd_cm - hb2.bpd_cm) / hb.bpd_cm < 0.01);
}

TEST_CASE("px_to_cm conversions") {
  CHECK(px_to_cm(100.0, {0.5, 0.5}) == doctest::Approx(5.0));
  CHECK(px_to_cm(0.0, {0.5, 0.5}) == doctest::Approx(0.0));
  const double v = px_to_cm(50.0, {0.2, 0.1}, PointRC{30.0, 40.0});
  CHECK(v == doctest::Approx(std::sqrt(36.0 + 16.0) / 10.0).epsilon(1e-9));
  CHECK_THROWS(px_to_cm(50.0, {0.2, 0.1}));
}

TEST_CASE("anisotropic spacing fits in physical coordinates") {
  // circle in mm space appears as an ellipse in anisotropic pixels
  const auto mask = disk_mask(256, 128, 128, 50, 100);  // row radius 50 px, col radius 100 px
  const SpacingMm sp{0.4, 0.2};                         // both 20 mm physical radius
  const auto hb = head_biometrics(mask, sp);
  CHECK(std::abs(hb.hc_cm - 2.0 * M_PI * 2.0) / (2.0 * M_PI * 2.0) < 0.01);
  CHECK(std::abs(hb.bpd_cm - 4.0) / 4.0 < 0.01);
}
