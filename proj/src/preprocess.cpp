#include "ageus/preprocess.hpp"

#include <opencv2/imgproc.hpp>

#include <cmath>

namespace ageus {

UltrasoundImage normalize_intensity(const UltrasoundImage& image) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < image.rows(); ++r)
    for (int c = 0; c < image.cols(); ++c) {
      const double v = image.pixels(r, c);
      if (!std::isfinite(v)) throw std::runtime_error("non-finite pixel in study '" + image.study_id + "'");
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  UltrasoundImage out = image;
  out.pixels = image.pixels.clone();
  if (hi > lo) {
    const double inv = 1.0 / (hi - lo);
    for (int r = 0; r < image.rows(); ++r)
      for (int c = 0; c < image.cols(); ++c) out.pixels(r, c) = (image.pixels(r, c) - lo) * inv;
  } else {
    out.pixels.setTo(0.0);  // constant frame carries no anatomy
  }
  return out;
}

ResizeResult resize_to_model(const UltrasoundImage& image,
                             const std::optional<SegmentationMask>& mask, int target) {
  if (target < 8) throw std::invalid_argument("resize target must be >= 8");
  ResizeResult res;
  res.scale_row = static_cast<double>(image.rows()) / target;
  res.scale_col = static_cast<double>(image.cols()) / target;

  res.image = image;
  cv::resize(image.pixels, res.image.pixels, cv::Size(target, target), 0, 0, cv::INTER_LINEAR);

  if (mask) {
    SegmentationMask m = *mask;
    cv::resize(mask->pixels, m.pixels, cv::Size(target, target), 0, 0, cv::INTER_NEAREST);
    res.mask = std::move(m);
  }
  return res;
}

}  // namespace ageus
