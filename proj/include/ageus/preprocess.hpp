#pragma once

#include "ageus/types.hpp"

namespace ageus {

// Min-max rescale to [0,1]; constant images map to all-zeros.
UltrasoundImage normalize_intensity(const UltrasoundImage& image);

struct ResizeResult {
  UltrasoundImage image;                     // target x target, bilinear
  std::optional<SegmentationMask> mask;      // nearest-neighbor, stays binary
  double scale_row = 1.0;                    // sr = H / target
  double scale_col = 1.0;                    // sc = W / target
};

ResizeResult resize_to_model(const UltrasoundImage& image,
                             const std::optional<SegmentationMask>& mask = std::nullopt,
                             int target = 256);

// Maps a model-space coordinate back to original pixel space.
inline PointRC to_original_space(const PointRC& p, double scale_row, double scale_col) {
  return {p.row * scale_row, p.col * scale_col};
}

}  // namespace ageus
