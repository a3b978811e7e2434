#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace ageus {

// Dense NCHW tensor of doubles.
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_), v(static_cast<size_t>(n_) * c_ * h_ * w_, 0.0) {}

  size_t size() const { return v.size(); }
  size_t plane() const { return static_cast<size_t>(h) * w; }

  double& at(int i, int j, int y, int x) {
    return v[((static_cast<size_t>(i) * c + j) * h + y) * w + x];
  }
  double at(int i, int j, int y, int x) const {
    return v[((static_cast<size_t>(i) * c + j) * h + y) * w + x];
  }

  double* sample(int i) { return v.data() + static_cast<size_t>(i) * c * h * w; }
  const double* sample(int i) const { return v.data() + static_cast<size_t>(i) * c * h * w; }

  void zero() { std::fill(v.begin(), v.end(), 0.0); }

  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
};

// Learnable parameter with its gradient accumulator.
struct Param {
  std::vector<double> w;
  std::vector<double> g;

  explicit Param(size_t size = 0) : w(size, 0.0), g(size, 0.0) {}
  void resize(size_t size) {
    w.assign(size, 0.0);
    g.assign(size, 0.0);
  }
  void zero_grad() { std::fill(g.begin(), g.end(), 0.0); }
};

}  // namespace ageus
