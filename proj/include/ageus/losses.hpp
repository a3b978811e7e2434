#pragma once

#include "ageus/tensor.hpp"
#include "ageus/types.hpp"

namespace ageus {

// 0.5 * soft Dice loss + 0.5 * categorical cross-entropy over the 2-channel
// softmax of one sample. Smoothing eps = 1e-6 in the Dice numerator and
// denominator. `target` is the binary foreground mask at logits resolution.
// When `d_logits` is non-null the per-logit gradient (scaled by `weight`)
// is accumulated into it.
double seg_loss_sample(const Tensor& logits, int sample, const Grid& target,
                       Tensor* d_logits = nullptr, double weight = 1.0);

// Convenience wrapper for a single-sample tensor.
double seg_loss(const Tensor& logits, const Grid& target, Tensor* d_logits = nullptr);

// Mean squared error over all pixels.
double femur_loss(const Tensor& pred, const Tensor& target, Tensor* d_pred = nullptr);

// Hard foreground mask from 2-channel logits (argmax).
Grid logits_to_mask(const Tensor& logits, int sample);

}  // namespace ageus
