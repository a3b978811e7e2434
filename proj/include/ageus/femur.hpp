#pragma once

#include "ageus/types.hpp"

namespace ageus {

// Per-pixel normalized distance to the nearest femur endpoint, in [0,1].
struct DistanceMap {
  Grid values;

  int rows() const { return values.rows; }
  int cols() const { return values.cols; }
};

struct EndpointPair {
  PointRC p1;  // leftmost-topmost first
  PointRC p2;
};

struct FemurPostprocessParams {
  double sigma_px = 2.0;        // Gaussian smoothing
  int opening_radius_px = 2;    // disk radius for morphological opening
  double start_percentile = 10.0;
  double min_percentile = 2.0;
  double max_percentile = 30.0;
  double percentile_step = 2.0;
};

// value(p) = min(d(p, p1), d(p, p2)) / max, exact zeros at the rounded
// endpoint pixels. Throws for a degenerate annotation (p1 == p2).
DistanceMap make_distance_map(const FemurAnnotation& annotation, int rows, int cols);

// Gaussian smoothing followed by a grayscale opening of the inverted map
// (equivalently a closing of the map, which removes small dark specks),
// re-normalized to [0,1]. Constant maps pass through unchanged.
DistanceMap postprocess_map(const DistanceMap& map, const FemurPostprocessParams& params = {});

// Threshold the low-value region at a percentile, binary-open it, sweep the
// percentile until exactly two components emerge, falling back to
// marker-based watershed flooding to split or merge. Returns the argmin
// pixel of each region (ties broken to the smallest (row, col)).
// Throws "endpoints not separable" when no two regions can be obtained.
EndpointPair locate_endpoints(const DistanceMap& map, const FemurPostprocessParams& params = {});

// Metric Euclidean distance under per-axis spacing, in cm.
double femur_length(const EndpointPair& pair, const SpacingMm& spacing);
double femur_length(const FemurAnnotation& annotation, const SpacingMm& spacing);

}  // namespace ageus
