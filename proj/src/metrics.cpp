#include "ageus/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace ageus {

double dice(const SegmentationMask& a, const SegmentationMask& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("mask shape mismatch");
  long inter = 0, na = 0, nb = 0;
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) {
      const bool pa = a.pixels(r, c) > 0.5;
      const bool pb = b.pixels(r, c) > 0.5;
      na += pa;
      nb += pb;
      inter += pa && pb;
    }
  if (na + nb == 0) return 1.0;
  return 2.0 * inter / static_cast<double>(na + nb);
}

std::vector<PointRC> boundary_pixels(const SegmentationMask& m) {
  std::vector<PointRC> out;
  auto fg = [&](int r, int c) {
    if (r < 0 || c < 0 || r >= m.rows() || c >= m.cols()) return false;
    return m.pixels(r, c) > 0.5;
  };
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) {
      if (!fg(r, c)) continue;
      if (!fg(r - 1, c) || !fg(r + 1, c) || !fg(r, c - 1) || !fg(r, c + 1))
        out.push_back({static_cast<double>(r), static_cast<double>(c)});
    }
  return out;
}

namespace {

double directed_hausdorff(const std::vector<PointRC>& from, const std::vector<PointRC>& to,
                          double sr, double sc) {
  double worst = 0.0;
  for (const auto& p : from) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : to) {
      const double dr = (p.row - q.row) * sr;
      const double dc = (p.col - q.col) * sc;
      best = std::min(best, dr * dr + dc * dc);
      if (best == 0.0) break;
    }
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

}  // namespace

double hausdorff_mm(const SegmentationMask& a, const SegmentationMask& b,
                    const SpacingMm& spacing) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("mask shape mismatch");
  const auto ba = boundary_pixels(a);
  const auto bb = boundary_pixels(b);
  if (ba.empty() || bb.empty()) throw std::runtime_error("empty mask");
  const double sr = spacing.row_mm_per_px, sc = spacing.col_mm_per_px;
  return std::max(directed_hausdorff(ba, bb, sr, sc), directed_hausdorff(bb, ba, sr, sc));
}

ErrorReport error_report(const std::vector<double>& pred, const std::vector<double>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw std::invalid_argument("pred/truth length mismatch or empty");
  ErrorReport rep;
  for (size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    rep.mae += std::abs(d);
    rep.mse += d * d;
    if (truth[i] == 0.0) throw std::runtime_error("zero truth value in MAPE");
    rep.mape += std::abs(d / truth[i]);
  }
  const double n = static_cast<double>(pred.size());
  rep.mae /= n;
  rep.mse /= n;
  rep.mape /= n;
  rep.rmse = std::sqrt(rep.mse);
  return rep;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("empty sample");
  std::sort(values.begin(), values.end());
  const double idx = p / 100.0 * (values.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(idx));
  const size_t hi = static_cast<size_t>(std::ceil(idx));
  const double frac = idx - lo;
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

MetricSummary summarize(const std::vector<double>& values, Orientation orientation) {
  MetricSummary s;
  s.median = percentile(values, 50.0);
  s.iqr_low = percentile(values, 25.0);
  s.iqr_high = percentile(values, 75.0);
  s.worst5 = percentile(values, orientation == Orientation::HigherBetter ? 5.0 : 95.0);
  return s;
}

}  // namespace ageus
