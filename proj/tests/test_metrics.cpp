#include "ageus/metrics.hpp"
#include "ageus/stats.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace ageus;

namespace {

SegmentationMask make_mask(int rows, int cols, std::initializer_list<std::pair<int, int>> on) {
  SegmentationMask m;
  m.pixels = Grid::zeros(rows, cols);
  for (const auto& [r, c] : on) m.pixels(r, c) = 1.0;
  return m;
}

SegmentationMask square(int rows, int cols, int r0, int c0, int side) {
  SegmentationMask m;
  m.pixels = Grid::zeros(rows, cols);
  for (int r = r0; r < r0 + side; ++r)
    for (int c = c0; c < c0 + side; ++c) m.pixels(r, c) = 1.0;
  return m;
}

double brute_dice(const SegmentationMask& a, const SegmentationMask& b) {
  double inter = 0, na = 0, nb = 0;
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) {
      const bool fa = a.pixels(r, c) > 0.5, fb = b.pixels(r, c) > 0.5;
      inter += fa && fb;
      na += fa;
      nb += fb;
    }
  if (na + nb == 0) return 1.0;
  return 2.0 * inter / (na + nb);
}

double brute_hausdorff(const SegmentationMask& a, const SegmentationMask& b,
                       const SpacingMm& sp) {
  const auto pa = boundary_pixels(a), pb = boundary_pixels(b);
  auto directed = [&](const std::vector<PointRC>& from, const std::vector<PointRC>& to) {
    double worst = 0.0;
    for (const auto& p : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : to) {
        const double dr = (p.row - q.row) * sp.row_mm_per_px;
        const double dc = (p.col - q.col) * sp.col_mm_per_px;
        best = std::min(best, std::sqrt(dr * dr + dc * dc));
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(pa, pb), directed(pb, pa));
}

}  // namespace

TEST_CASE("dice on simple overlaps") {
  const auto a = square(10, 10, 2, 2, 4);
  CHECK(dice(a, a) == 1.0);

  const auto b = square(10, 10, 2, 4, 4);  // half-column overlap: 8 shared of 16+16
  CHECK(dice(a, b) == doctest::Approx(2.0 * 8 / 32).epsilon(1e-12));

  const auto empty = square(10, 10, 0, 0, 0);
  CHECK(dice(empty, empty) == 1.0);
  CHECK(dice(a, empty) == 0.0);
}

TEST_CASE("dice agrees with a brute-force count on random masks") {
  std::mt19937_64 rng(91);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 20; ++trial) {
    SegmentationMask a, b;
    a.pixels = Grid::zeros(17, 13);
    b.pixels = Grid::zeros(17, 13);
    for (int r = 0; r < 17; ++r)
      for (int c = 0; c < 13; ++c) {
        a.pixels(r, c) = coin(rng) ? 1.0 : 0.0;
        b.pixels(r, c) = coin(rng) ? 1.0 : 0.0;
      }
    CHECK(dice(a, b) == doctest::Approx(brute_dice(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("hausdorff distance in physical units") {
  // Two single pixels one column apart with 1.5 mm column spacing.
  const auto a = make_mask(8, 8, {{3, 3}});
  const auto b = make_mask(8, 8, {{3, 4}});
  CHECK(hausdorff_mm(a, b, SpacingMm{1.0, 1.5}) == doctest::Approx(1.5).epsilon(1e-12));

  // Nested squares: inner 4x4 centered in an 8x8, unit spacing.
  const auto outer = square(16, 16, 4, 4, 8);
  const auto inner = square(16, 16, 6, 6, 4);
  CHECK(hausdorff_mm(outer, inner, SpacingMm{1.0, 1.0}) ==
        doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));

  CHECK(hausdorff_mm(a, a, SpacingMm{1.0, 1.0}) == 0.0);
}

TEST_CASE("hausdorff agrees with a brute-force scan on random blobs") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> pos(1, 10), side(2, 5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = square(20, 20, pos(rng), pos(rng), side(rng));
    const auto b = square(20, 20, pos(rng), pos(rng), side(rng));
    const SpacingMm sp{0.7, 1.3};
    CHECK(hausdorff_mm(a, b, sp) == doctest::Approx(brute_hausdorff(a, b, sp)).epsilon(1e-12));
  }
}

TEST_CASE("error_report on a worked example") {
  const std::vector<double> pred{2.0, 4.0};
  const std::vector<double> truth{1.0, 2.0};
  const auto r = error_report(pred, truth);
  CHECK(r.mae == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(r.mse == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(r.rmse == doctest::Approx(std::sqrt(2.5)).epsilon(1e-12));
  CHECK(r.mape == doctest::Approx(1.0).epsilon(1e-12));  // (1/1 + 2/2)/2
}

TEST_CASE("error_report scale behavior") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(1.0, 10.0);
  std::vector<double> pred, truth;
  for (int i = 0; i < 25; ++i) {
    pred.push_back(u(rng));
    truth.push_back(u(rng));
  }
  const auto base = error_report(pred, truth);
  std::vector<double> pred2 = pred, truth2 = truth;
  for (auto& v : pred2) v *= 3.0;
  for (auto& v : truth2) v *= 3.0;
  const auto scaled = error_report(pred2, truth2);
  CHECK(scaled.mae == doctest::Approx(3.0 * base.mae).epsilon(1e-12));
  CHECK(scaled.mse == doctest::Approx(9.0 * base.mse).epsilon(1e-12));
  CHECK(scaled.rmse == doctest::Approx(3.0 * base.rmse).epsilon(1e-12));
  CHECK(scaled.mape == doctest::Approx(base.mape).epsilon(1e-12));  // scale-free
}

TEST_CASE("percentile and summarize") {
  std::vector<double> vals;
  for (int i = 1; i <= 100; ++i) vals.push_back(static_cast<double>(i));

  CHECK(percentile(vals, 50.0) == doctest::Approx(50.5).epsilon(1e-12));
  CHECK(percentile(vals, 0.0) == 1.0);
  CHECK(percentile(vals, 100.0) == 100.0);

  const auto s = summarize(vals, Orientation::LowerBetter);
  CHECK(s.median == doctest::Approx(50.5).epsilon(1e-12));
  CHECK(s.iqr_low == doctest::Approx(percentile(vals, 25.0)).epsilon(1e-12));
  CHECK(s.iqr_high == doctest::Approx(percentile(vals, 75.0)).epsilon(1e-12));
  CHECK(s.worst5 == doctest::Approx(95.05).epsilon(1e-12));  // 95th percentile

  const auto sh = summarize(vals, Orientation::HigherBetter);
  CHECK(sh.worst5 == doctest::Approx(percentile(vals, 5.0)).epsilon(1e-12));

  const auto one = summarize({7.0}, Orientation::LowerBetter);
  CHECK(one.median == 7.0);
  CHECK(one.iqr_low == 7.0);
  CHECK(one.iqr_high == 7.0);
  CHECK(one.worst5 == 7.0);
}

TEST_CASE("summarize is invariant to input order") {
  std::vector<double> vals{3.0, 1.0, 4.0, 1.5, 9.0, 2.6, 5.0};
  auto shuffled = vals;
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(11));
  const auto a = summarize(vals, Orientation::LowerBetter);
  const auto b = summarize(shuffled, Orientation::LowerBetter);
  CHECK(a.median == b.median);
  CHECK(a.iqr_low == b.iqr_low);
  CHECK(a.iqr_high == b.iqr_high);
  CHECK(a.worst5 == b.worst5);
}

TEST_CASE("ks_normality separates normal from uniform draws") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> gauss(3.0, 2.0);
  std::vector<double> normal_draws;
  for (int i = 0; i < 500; ++i) normal_draws.push_back(gauss(rng));

  std::mt19937_64 rng2(4);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> uniform_draws;
  for (int i = 0; i < 500; ++i) uniform_draws.push_back(unif(rng2));

  const auto rn = ks_normality(normal_draws);
  const auto ru = ks_normality(uniform_draws);
  CHECK(rn.p_value > 0.05);
  CHECK(ru.p_value < 0.01);
  CHECK(rn.statistic >= 0.0);
  CHECK(rn.statistic <= 1.0);
  CHECK(ru.statistic > rn.statistic);
}

TEST_CASE("ks_normality rejects degenerate samples") {
  CHECK_THROWS_AS(ks_normality({1.0, 1.0, 1.0, 1.0}), std::runtime_error);
  CHECK_THROWS_AS(ks_normality({1.0}), std::runtime_error);
}

TEST_CASE("kolmogorov tail and normal cdf basics") {
  CHECK(kolmogorov_q(0.0) == doctest::Approx(1.0));
  CHECK(kolmogorov_q(10.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(kolmogorov_q(1.0) > kolmogorov_q(2.0));
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-9));
}

TEST_CASE("wilcoxon signed-rank small-sample exact cases") {
  const std::vector<double> a{1.0, 2.0, 3.0};
  CHECK_THROWS_WITH_AS(wilcoxon_signed_rank(a, a), "all differences zero", std::runtime_error);

  // Six pairs where a > b everywhere: W = min(W+, W-) = 0, exact two-sided
  // p = 2 / 2^6 = 0.03125.
  const std::vector<double> x{2.0, 3.1, 4.2, 5.3, 6.4, 7.5};
  const std::vector<double> y{1.0, 1.1, 1.2, 1.3, 1.4, 1.5};
  const auto r = wilcoxon_signed_rank(x, y);
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == doctest::Approx(0.03125).epsilon(1e-12));

  // Swapping the pair order must not change the two-sided result.
  const auto rs = wilcoxon_signed_rank(y, x);
  CHECK(rs.statistic == r.statistic);
  CHECK(rs.p_value == doctest::Approx(r.p_value).epsilon(1e-12));
}

TEST_CASE("wilcoxon on balanced differences is far from significant") {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0};
  const std::vector<double> y{1.5, 1.5, 3.5, 3.5, 5.5, 4.5, 7.5, 7.5};
  const auto r = wilcoxon_signed_rank(x, y);
  CHECK(r.p_value > 0.5);
}
