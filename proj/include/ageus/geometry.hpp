#pragma once

#include "ageus/types.hpp"

#include <optional>
#include <vector>

namespace ageus {

// Fitted ellipse in (row, col) pixel coordinates. rotation is the angle of
// the major axis against the column axis, normalized to [0, pi).
struct EllipseParams {
  PointRC center;
  double semi_major = 0.0;  // a >= b > 0
  double semi_minor = 0.0;
  double rotation = 0.0;
  double residual = 0.0;    // RMS algebraic residual of the conic fit
};

struct BiometricSet {
  std::optional<double> hc_cm;
  std::optional<double> bpd_cm;
  std::optional<double> ac_cm;
  std::optional<double> fl_cm;
};

// Closed boundary polygon of the largest 8-connected foreground component.
// Throws "no structure found" on an empty mask, "structure too small" when
// the largest component has fewer than 10 pixels.
std::vector<PointRC> extract_contour(const SegmentationMask& mask);

// Direct least-squares conic fit with the ellipse-specific algebraic
// constraint (Halir-Flusser formulation of the Fitzgibbon method).
// Throws "degenerate conic" for collinear or otherwise degenerate input.
EllipseParams fit_ellipse(const std::vector<PointRC>& points);

// Ramanujan's second approximation of the ellipse perimeter.
double ellipse_perimeter(const EllipseParams& e);
double ellipse_perimeter(double a, double b);

struct HeadBiometrics {
  double hc_cm = 0.0;
  double bpd_cm = 0.0;
  EllipseParams ellipse;  // pixel-space fit, for reporting
};

struct AbdomenBiometrics {
  double ac_cm = 0.0;
  EllipseParams ellipse;
};

// Mask must be in original pixel space. With anisotropic spacing the contour
// is rescaled into isotropic mm coordinates before fitting.
HeadBiometrics head_biometrics(const SegmentationMask& mask, const SpacingMm& spacing);
AbdomenBiometrics abdomen_biometrics(const SegmentationMask& mask, const SpacingMm& spacing);

// Pixel length to cm. Anisotropic spacing needs a direction vector (dr, dc)
// to give the straight-line measure a metric meaning.
double px_to_cm(double length_px, const SpacingMm& spacing,
                const std::optional<PointRC>& direction = std::nullopt);

}  // namespace ageus
