#pragma once

#include "ageus/tensor.hpp"

#include <random>
#include <vector>

namespace ageus {

// 3x3 convolution, stride 1, pad 1 (same spatial size).
class Conv3x3 {
 public:
  Conv3x3(int cin, int cout) : cin_(cin), cout_(cout), weight_(9ul * cin * cout), bias_(cout) {}

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void init(std::mt19937_64& rng);
  std::vector<Param*> params() { return {&weight_, &bias_}; }
  Param& weight() { return weight_; }
  Param& bias() { return bias_; }
  int cin() const { return cin_; }
  int cout() const { return cout_; }

 private:
  int cin_, cout_;
  Param weight_;  // [cout][cin*9]
  Param bias_;
  Tensor x_;  // cached input
};

// 1x1 convolution (per-pixel linear head).
class Conv1x1 {
 public:
  Conv1x1(int cin, int cout) : cin_(cin), cout_(cout), weight_(static_cast<size_t>(cin) * cout), bias_(cout) {}

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void init(std::mt19937_64& rng);
  std::vector<Param*> params() { return {&weight_, &bias_}; }
  Param& weight() { return weight_; }

 private:
  int cin_, cout_;
  Param weight_;  // [cout][cin]
  Param bias_;
  Tensor x_;
};

// Transposed convolution, 2x2 kernel, stride 2 (exact 2x upsampling).
class ConvTranspose2 {
 public:
  ConvTranspose2(int cin, int cout)
      : cin_(cin), cout_(cout), weight_(4ul * cin * cout), bias_(cout) {}

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);
  void init(std::mt19937_64& rng);
  std::vector<Param*> params() { return {&weight_, &bias_}; }

 private:
  int cin_, cout_;
  Param weight_;  // [cout*4][cin]
  Param bias_;
  Tensor x_;
};

// 2x2 max pooling, stride 2.
class MaxPool2 {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);

 private:
  std::vector<size_t> argmax_;
  int in_h_ = 0, in_w_ = 0;
};

// Per-sample, per-channel feature normalization (no affine parameters).
class InstanceNorm {
 public:
  explicit InstanceNorm(double eps = 1e-5) : eps_(eps) {}
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);

 private:
  double eps_;
  Tensor xhat_;
  std::vector<double> inv_std_;  // per (n, c)
};

class LeakyReLU {
 public:
  explicit LeakyReLU(double slope = 0.01) : slope_(slope) {}
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dy);

 private:
  double slope_;
  std::vector<bool> neg_;
};

// Channel concatenation [a; b] and its adjoint.
Tensor concat_channels(const Tensor& a, const Tensor& b);
void split_channels(const Tensor& dy, int ca, Tensor* da, Tensor* db);

}  // namespace ageus
