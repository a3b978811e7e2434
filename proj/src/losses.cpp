#include "ageus/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace ageus {

double seg_loss_sample(const Tensor& logits, int sample, const Grid& target, Tensor* d_logits,
                       double weight) {
  if (logits.c != 2) throw std::invalid_argument("segmentation logits need 2 channels");
  if (target.rows != logits.h || target.cols != logits.w)
    throw std::invalid_argument("target/logits shape mismatch");
  const size_t plane = logits.plane();
  const double* z0 = logits.sample(sample);
  const double* z1 = z0 + plane;
  const double inv_n = 1.0 / static_cast<double>(plane);
  constexpr double kEps = 1e-6;

  // foreground probability via stable logistic of (z1 - z0)
  std::vector<double> p(plane);
  double ce = 0.0, sum_p = 0.0, sum_g = 0.0, sum_pg = 0.0;
  for (size_t k = 0; k < plane; ++k) {
    const double d = z1[k] - z0[k];
    const double pk = d >= 0.0 ? 1.0 / (1.0 + std::exp(-d)) : std::exp(d) / (1.0 + std::exp(d));
    p[k] = pk;
    const double g = target(static_cast<int>(k / logits.w), static_cast<int>(k % logits.w));
    // -log softmax of the true class, stable form
    const double m = std::max(z0[k], z1[k]);
    const double lse = m + std::log(std::exp(z0[k] - m) + std::exp(z1[k] - m));
    ce += g > 0.5 ? lse - z1[k] : lse - z0[k];
    sum_p += pk;
    sum_g += g;
    sum_pg += pk * g;
  }
  ce *= inv_n;
  const double num = 2.0 * sum_pg + kEps;
  const double den = sum_p + sum_g + kEps;
  const double dice_loss = 1.0 - num / den;
  const double loss = 0.5 * dice_loss + 0.5 * ce;

  if (d_logits) {
    double* dz0 = d_logits->sample(sample);
    double* dz1 = dz0 + plane;
    for (size_t k = 0; k < plane; ++k) {
      const double g = target(static_cast<int>(k / logits.w), static_cast<int>(k % logits.w));
      // CE: softmax minus one-hot, averaged over pixels
      const double dce1 = (p[k] - (g > 0.5 ? 1.0 : 0.0)) * inv_n;
      // Dice: dL/dp = -(2 g den - num) / den^2, then through the logistic
      const double dl_dp = -(2.0 * g * den - num) / (den * den);
      const double dd1 = dl_dp * p[k] * (1.0 - p[k]);
      const double d1 = weight * (0.5 * dce1 + 0.5 * dd1);
      dz1[k] += d1;
      dz0[k] -= d1;
    }
  }
  return loss;
}

double seg_loss(const Tensor& logits, const Grid& target, Tensor* d_logits) {
  return seg_loss_sample(logits, 0, target, d_logits, 1.0);
}

double femur_loss(const Tensor& pred, const Tensor& target, Tensor* d_pred) {
  if (!pred.same_shape(target)) throw std::invalid_argument("pred/target shape mismatch");
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  double loss = 0.0;
  for (size_t k = 0; k < pred.size(); ++k) {
    const double d = pred.v[k] - target.v[k];
    loss += d * d;
    if (d_pred) d_pred->v[k] += 2.0 * d * inv_n;
  }
  return loss * inv_n;
}

Grid logits_to_mask(const Tensor& logits, int sample) {
  Grid mask(logits.h, logits.w);
  const size_t plane = logits.plane();
  const double* z0 = logits.sample(sample);
  const double* z1 = z0 + plane;
  for (int r = 0; r < logits.h; ++r)
    for (int c = 0; c < logits.w; ++c) {
      const size_t k = static_cast<size_t>(r) * logits.w + c;
      mask(r, c) = z1[k] > z0[k] ? 1.0 : 0.0;
    }
  return mask;
}

}  // namespace ageus
