#pragma once

#include "ageus/geometry.hpp"
#include "ageus/types.hpp"

#include <filesystem>
#include <optional>
#include <random>
#include <string>

namespace ageus {

// Ranges are expressed in pixels at a 256 px reference frame and scale
// linearly with image_size. Abdomen ring contrast must stay below the head
// ring contrast (abdominal boundaries image with lower contrast).
struct PhantomSpec {
  int image_size = 256;

  double head_a_px_min = 72.0, head_a_px_max = 102.0;      // semi-major
  double abd_a_px_min = 78.0, abd_a_px_max = 104.0;        // semi-major
  double abd_aspect_min = 1.02, abd_aspect_max = 1.15;     // a/b
  double femur_len_px_min = 102.0, femur_len_px_max = 166.0;
  double femur_thickness_px = 5.0;

  double head_ring_contrast = 0.95;
  double abd_ring_contrast = 0.50;
  double interior_level = 0.32;
  double background_level = 0.12;
  double speckle_sigma = 0.35;

  uint64_t seed = 0;

  void validate() const;
};

struct HeadPhantom {
  UltrasoundImage image;
  SegmentationMask mask;
  EllipseParams truth;  // pixel-space construction parameters
};

struct AbdomenPhantom {
  UltrasoundImage image;
  SegmentationMask mask;
  EllipseParams truth;
};

struct FemurPhantom {
  UltrasoundImage image;
  FemurAnnotation annotation;
};

// `scale` in [0,1] interpolates the plausible biometric ranges; when absent a
// value is drawn from rng. One shared scale per study keeps the four
// biometrics mutually consistent for gestational-age arithmetic.
HeadPhantom gen_head(const PhantomSpec& spec, std::mt19937_64& rng,
                     std::optional<double> scale = std::nullopt);
AbdomenPhantom gen_abdomen(const PhantomSpec& spec, std::mt19937_64& rng,
                           std::optional<double> scale = std::nullopt);
FemurPhantom gen_femur(const PhantomSpec& spec, std::mt19937_64& rng,
                       std::optional<double> scale = std::nullopt);

// Writes <out_dir>/<study_id>/{head,abdomen,femur}.png (+ masks), a
// manifest.csv, and a truth.csv with per-study reference biometrics measured
// from the generated masks/annotations. Returns the manifest path.
std::filesystem::path gen_dataset(const PhantomSpec& spec, int n_studies,
                                  const std::filesystem::path& out_dir);

}  // namespace ageus
