#pragma once

#include <opencv2/core.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ageus {

// Scalar image grid, row-major, intensities as doubles.
using Grid = cv::Mat1d;

enum class Plane { Head, Abdomen, Femur };

inline const char* plane_name(Plane p) {
  switch (p) {
    case Plane::Head: return "head";
    case Plane::Abdomen: return "abdomen";
    case Plane::Femur: return "femur";
  }
  throw std::logic_error("bad plane tag");
}

enum class Structure { Head, Abdomen };

// Physical pixel size, mm per pixel, per axis.
struct SpacingMm {
  double row_mm_per_px = 1.0;
  double col_mm_per_px = 1.0;

  bool isotropic(double tol = 1e-12) const {
    return std::abs(row_mm_per_px - col_mm_per_px) <= tol;
  }
};

// Subpixel image coordinate, origin at top-left.
struct PointRC {
  double row = 0.0;
  double col = 0.0;
};

struct UltrasoundImage {
  Grid pixels;            // H x W
  SpacingMm spacing_mm;
  Plane plane_tag = Plane::Head;
  std::string study_id;

  int rows() const { return pixels.rows; }
  int cols() const { return pixels.cols; }
};

struct SegmentationMask {
  Grid pixels;  // values in {0,1}, same H x W as paired image
  Structure structure = Structure::Head;

  int rows() const { return pixels.rows; }
  int cols() const { return pixels.cols; }
};

// Weak femur annotation: the two diaphysis endpoints.
struct FemurAnnotation {
  PointRC p1;
  PointRC p2;
};

struct StudyRecord {
  std::string study_id;
  std::optional<UltrasoundImage> head_image;
  std::optional<SegmentationMask> head_mask;
  std::optional<UltrasoundImage> abdomen_image;
  std::optional<SegmentationMask> abdomen_mask;
  std::optional<UltrasoundImage> femur_image;
  std::optional<FemurAnnotation> femur_annotation;
};

}  // namespace ageus
