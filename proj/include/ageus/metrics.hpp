#pragma once

#include "ageus/types.hpp"

#include <vector>

namespace ageus {

enum class Orientation { HigherBetter, LowerBetter };

struct MetricSummary {
  double median = 0.0;
  double iqr_low = 0.0;   // 25th percentile
  double iqr_high = 0.0;  // 75th percentile
  double worst5 = 0.0;    // 5th or 95th percentile depending on orientation
};

struct ErrorReport {
  double mae = 0.0;
  double mse = 0.0;
  double rmse = 0.0;
  double mape = 0.0;  // fraction, not percent
};

// 2|A∩B| / (|A| + |B|); both masks empty -> 1.0.
double dice(const SegmentationMask& a, const SegmentationMask& b);

// Exact symmetric Hausdorff distance between boundary pixel sets under the
// physical per-axis metric, in mm. A boundary pixel is a foreground pixel
// with a 4-neighbor outside the foreground (image border counts).
double hausdorff_mm(const SegmentationMask& a, const SegmentationMask& b,
                    const SpacingMm& spacing);

std::vector<PointRC> boundary_pixels(const SegmentationMask& m);

ErrorReport error_report(const std::vector<double>& pred, const std::vector<double>& truth);

// Linear-interpolation percentile over sorted order statistics.
double percentile(std::vector<double> values, double p);

MetricSummary summarize(const std::vector<double>& values, Orientation orientation);

}  // namespace ageus
