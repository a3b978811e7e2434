#include "ageus/layers.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace ageus {
namespace {

using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// im2col for 3x3/pad1: col is (cin*9) x (h*w), row-major.
void im2col3(const double* x, int c, int h, int w, double* col) {
  const size_t plane = static_cast<size_t>(h) * w;
  size_t row = 0;
  for (int j = 0; j < c; ++j) {
    const double* xc = x + j * plane;
    for (int ky = -1; ky <= 1; ++ky) {
      for (int kx = -1; kx <= 1; ++kx, ++row) {
        double* dst = col + row * plane;
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky;
          if (sy < 0 || sy >= h) {
            std::fill(dst + static_cast<size_t>(y) * w, dst + static_cast<size_t>(y + 1) * w, 0.0);
            continue;
          }
          const double* src = xc + static_cast<size_t>(sy) * w;
          double* d = dst + static_cast<size_t>(y) * w;
          for (int xpos = 0; xpos < w; ++xpos) {
            const int sx = xpos + kx;
            d[xpos] = (sx < 0 || sx >= w) ? 0.0 : src[sx];
          }
        }
      }
    }
  }
}

void col2im3(const double* col, int c, int h, int w, double* x) {
  const size_t plane = static_cast<size_t>(h) * w;
  size_t row = 0;
  for (int j = 0; j < c; ++j) {
    double* xc = x + j * plane;
    for (int ky = -1; ky <= 1; ++ky) {
      for (int kx = -1; kx <= 1; ++kx, ++row) {
        const double* src = col + row * plane;
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky;
          if (sy < 0 || sy >= h) continue;
          double* d = xc + static_cast<size_t>(sy) * w;
          const double* s = src + static_cast<size_t>(y) * w;
          for (int xpos = 0; xpos < w; ++xpos) {
            const int sx = xpos + kx;
            if (sx >= 0 && sx < w) d[sx] += s[xpos];
          }
        }
      }
    }
  }
}

double he_std(size_t fan_in) { return std::sqrt(2.0 / static_cast<double>(fan_in)); }

void init_normal(Param& p, std::mt19937_64& rng, double sd) {
  std::normal_distribution<double> dist(0.0, sd);
  for (auto& w : p.w) w = dist(rng);
}

}  // namespace

// ---- Conv3x3 ----

void Conv3x3::init(std::mt19937_64& rng) {
  init_normal(weight_, rng, he_std(9ul * cin_));
  std::fill(bias_.w.begin(), bias_.w.end(), 0.0);
}

Tensor Conv3x3::forward(const Tensor& x) {
  x_ = x;
  Tensor y(x.n, cout_, x.h, x.w);
  const size_t plane = x.plane();
  std::vector<double> col(9ul * cin_ * plane);
  ConstMatMap W(weight_.w.data(), cout_, 9ul * cin_);
  for (int i = 0; i < x.n; ++i) {
    im2col3(x.sample(i), cin_, x.h, x.w, col.data());
    ConstMatMap C(col.data(), 9ul * cin_, plane);
    MatMap Y(y.sample(i), cout_, plane);
    Y.noalias() = W * C;
    for (int j = 0; j < cout_; ++j) Y.row(j).array() += bias_.w[j];
  }
  return y;
}

Tensor Conv3x3::backward(const Tensor& dy) {
  Tensor dx(x_.n, cin_, x_.h, x_.w);
  const size_t plane = x_.plane();
  std::vector<double> col(9ul * cin_ * plane);
  std::vector<double> dcol(9ul * cin_ * plane);
  ConstMatMap W(weight_.w.data(), cout_, 9ul * cin_);
  MatMap dW(weight_.g.data(), cout_, 9ul * cin_);
  for (int i = 0; i < x_.n; ++i) {
    im2col3(x_.sample(i), cin_, x_.h, x_.w, col.data());
    ConstMatMap C(col.data(), 9ul * cin_, plane);
    ConstMatMap dY(dy.sample(i), cout_, plane);
    dW.noalias() += dY * C.transpose();
    for (int j = 0; j < cout_; ++j) bias_.g[j] += dY.row(j).sum();
    MatMap dC(dcol.data(), 9ul * cin_, plane);
    dC.noalias() = W.transpose() * dY;
    col2im3(dcol.data(), cin_, x_.h, x_.w, dx.sample(i));
  }
  return dx;
}

// ---- Conv1x1 ----

void Conv1x1::init(std::mt19937_64& rng) {
  init_normal(weight_, rng, he_std(cin_));
  std::fill(bias_.w.begin(), bias_.w.end(), 0.0);
}

Tensor Conv1x1::forward(const Tensor& x) {
  x_ = x;
  Tensor y(x.n, cout_, x.h, x.w);
  const size_t plane = x.plane();
  ConstMatMap W(weight_.w.data(), cout_, cin_);
  for (int i = 0; i < x.n; ++i) {
    ConstMatMap X(x.sample(i), cin_, plane);
    MatMap Y(y.sample(i), cout_, plane);
    Y.noalias() = W * X;
    for (int j = 0; j < cout_; ++j) Y.row(j).array() += bias_.w[j];
  }
  return y;
}

Tensor Conv1x1::backward(const Tensor& dy) {
  Tensor dx(x_.n, cin_, x_.h, x_.w);
  const size_t plane = x_.plane();
  ConstMatMap W(weight_.w.data(), cout_, cin_);
  MatMap dW(weight_.g.data(), cout_, cin_);
  for (int i = 0; i < x_.n; ++i) {
    ConstMatMap X(x_.sample(i), cin_, plane);
    ConstMatMap dY(dy.sample(i), cout_, plane);
    dW.noalias() += dY * X.transpose();
    for (int j = 0; j < cout_; ++j) bias_.g[j] += dY.row(j).sum();
    MatMap dX(dx.sample(i), cin_, plane);
    dX.noalias() = W.transpose() * dY;
  }
  return dx;
}

// ---- ConvTranspose2 ----

void ConvTranspose2::init(std::mt19937_64& rng) {
  init_normal(weight_, rng, he_std(cin_));
  std::fill(bias_.w.begin(), bias_.w.end(), 0.0);
}

Tensor ConvTranspose2::forward(const Tensor& x) {
  x_ = x;
  const int oh = 2 * x.h, ow = 2 * x.w;
  Tensor y(x.n, cout_, oh, ow);
  const size_t plane = x.plane();
  std::vector<double> y4(4ul * cout_ * plane);
  ConstMatMap W(weight_.w.data(), 4ul * cout_, cin_);
  for (int i = 0; i < x.n; ++i) {
    ConstMatMap X(x.sample(i), cin_, plane);
    MatMap Y4(y4.data(), 4ul * cout_, plane);
    Y4.noalias() = W * X;
    // scatter (cout,2,2,h,w) -> (cout,2h,2w)
    for (int j = 0; j < cout_; ++j) {
      double* yc = y.sample(i) + static_cast<size_t>(j) * oh * ow;
      for (int dyy = 0; dyy < 2; ++dyy)
        for (int dxx = 0; dxx < 2; ++dxx) {
          const double* src = y4.data() + ((static_cast<size_t>(j) * 2 + dyy) * 2 + dxx) * plane;
          for (int yy = 0; yy < x.h; ++yy) {
            double* row = yc + static_cast<size_t>(2 * yy + dyy) * ow + dxx;
            const double* s = src + static_cast<size_t>(yy) * x.w;
            for (int xx = 0; xx < x.w; ++xx) row[2 * xx] = s[xx] + bias_.w[j];
          }
        }
    }
  }
  return y;
}

Tensor ConvTranspose2::backward(const Tensor& dy) {
  Tensor dx(x_.n, cin_, x_.h, x_.w);
  const size_t plane = x_.plane();
  const int ow = 2 * x_.w;
  std::vector<double> dy4(4ul * cout_ * plane);
  ConstMatMap W(weight_.w.data(), 4ul * cout_, cin_);
  MatMap dW(weight_.g.data(), 4ul * cout_, cin_);
  for (int i = 0; i < x_.n; ++i) {
    // gather (cout,2h,2w) -> (cout*4, h*w)
    for (int j = 0; j < cout_; ++j) {
      const double* dyc = dy.sample(i) + static_cast<size_t>(j) * 4 * plane;  // (2h)*(2w)
      double bsum = 0.0;
      for (int dyy = 0; dyy < 2; ++dyy)
        for (int dxx = 0; dxx < 2; ++dxx) {
          double* dst = dy4.data() + ((static_cast<size_t>(j) * 2 + dyy) * 2 + dxx) * plane;
          for (int yy = 0; yy < x_.h; ++yy) {
            const double* row = dyc + static_cast<size_t>(2 * yy + dyy) * ow + dxx;
            double* d = dst + static_cast<size_t>(yy) * x_.w;
            for (int xx = 0; xx < x_.w; ++xx) {
              d[xx] = row[2 * xx];
              bsum += row[2 * xx];
            }
          }
        }
      bias_.g[j] += bsum;
    }
    ConstMatMap dY4(dy4.data(), 4ul * cout_, plane);
    ConstMatMap X(x_.sample(i), cin_, plane);
    dW.noalias() += dY4 * X.transpose();
    MatMap dX(dx.sample(i), cin_, plane);
    dX.noalias() = W.transpose() * dY4;
  }
  return dx;
}

// ---- MaxPool2 ----

Tensor MaxPool2::forward(const Tensor& x) {
  const int oh = x.h / 2, ow = x.w / 2;
  in_h_ = x.h;
  in_w_ = x.w;
  Tensor y(x.n, x.c, oh, ow);
  argmax_.assign(y.size(), 0);
  size_t oi = 0;
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.c; ++j) {
      const double* xc = x.v.data() + (static_cast<size_t>(i) * x.c + j) * x.h * x.w;
      for (int yy = 0; yy < oh; ++yy)
        for (int xx = 0; xx < ow; ++xx, ++oi) {
          double best = -std::numeric_limits<double>::infinity();
          size_t best_idx = 0;
          for (int dyy = 0; dyy < 2; ++dyy)
            for (int dxx = 0; dxx < 2; ++dxx) {
              const size_t idx = static_cast<size_t>(2 * yy + dyy) * x.w + (2 * xx + dxx);
              if (xc[idx] > best) {
                best = xc[idx];
                best_idx = idx;
              }
            }
          y.v[oi] = best;
          argmax_[oi] = best_idx;
        }
    }
  return y;
}

Tensor MaxPool2::backward(const Tensor& dy) {
  Tensor dx(dy.n, dy.c, in_h_, in_w_);
  size_t oi = 0;
  for (int i = 0; i < dy.n; ++i)
    for (int j = 0; j < dy.c; ++j) {
      double* dxc = dx.v.data() + (static_cast<size_t>(i) * dy.c + j) * in_h_ * in_w_;
      const size_t n_out = static_cast<size_t>(dy.h) * dy.w;
      for (size_t k = 0; k < n_out; ++k, ++oi) dxc[argmax_[oi]] += dy.v[oi];
    }
  return dx;
}

// ---- InstanceNorm ----

Tensor InstanceNorm::forward(const Tensor& x) {
  Tensor y(x.n, x.c, x.h, x.w);
  xhat_ = Tensor(x.n, x.c, x.h, x.w);
  inv_std_.assign(static_cast<size_t>(x.n) * x.c, 0.0);
  const size_t plane = x.plane();
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.c; ++j) {
      const double* xc = x.v.data() + (static_cast<size_t>(i) * x.c + j) * plane;
      double mean = 0.0;
      for (size_t k = 0; k < plane; ++k) mean += xc[k];
      mean /= plane;
      double var = 0.0;
      for (size_t k = 0; k < plane; ++k) var += (xc[k] - mean) * (xc[k] - mean);
      var /= plane;
      const double inv = 1.0 / std::sqrt(var + eps_);
      inv_std_[static_cast<size_t>(i) * x.c + j] = inv;
      double* xh = xhat_.v.data() + (static_cast<size_t>(i) * x.c + j) * plane;
      double* yc = y.v.data() + (static_cast<size_t>(i) * x.c + j) * plane;
      for (size_t k = 0; k < plane; ++k) {
        xh[k] = (xc[k] - mean) * inv;
        yc[k] = xh[k];
      }
    }
  return y;
}

Tensor InstanceNorm::backward(const Tensor& dy) {
  Tensor dx(dy.n, dy.c, dy.h, dy.w);
  const size_t plane = dy.plane();
  for (int i = 0; i < dy.n; ++i)
    for (int j = 0; j < dy.c; ++j) {
      const size_t off = (static_cast<size_t>(i) * dy.c + j) * plane;
      const double* dyc = dy.v.data() + off;
      const double* xh = xhat_.v.data() + off;
      double* dxc = dx.v.data() + off;
      double mean_dy = 0.0, mean_dyxh = 0.0;
      for (size_t k = 0; k < plane; ++k) {
        mean_dy += dyc[k];
        mean_dyxh += dyc[k] * xh[k];
      }
      mean_dy /= plane;
      mean_dyxh /= plane;
      const double inv = inv_std_[static_cast<size_t>(i) * dy.c + j];
      for (size_t k = 0; k < plane; ++k)
        dxc[k] = inv * (dyc[k] - mean_dy - xh[k] * mean_dyxh);
    }
  return dx;
}

// ---- LeakyReLU ----

Tensor LeakyReLU::forward(const Tensor& x) {
  Tensor y = x;
  neg_.assign(x.size(), false);
  for (size_t k = 0; k < x.size(); ++k)
    if (x.v[k] < 0.0) {
      neg_[k] = true;
      y.v[k] = slope_ * x.v[k];
    }
  return y;
}

Tensor LeakyReLU::backward(const Tensor& dy) {
  Tensor dx = dy;
  for (size_t k = 0; k < dy.size(); ++k)
    if (neg_[k]) dx.v[k] = slope_ * dy.v[k];
  return dx;
}

// ---- concat ----

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  Tensor y(a.n, a.c + b.c, a.h, a.w);
  const size_t pa = static_cast<size_t>(a.c) * a.plane();
  const size_t pb = static_cast<size_t>(b.c) * b.plane();
  for (int i = 0; i < a.n; ++i) {
    std::copy(a.sample(i), a.sample(i) + pa, y.sample(i));
    std::copy(b.sample(i), b.sample(i) + pb, y.sample(i) + pa);
  }
  return y;
}

void split_channels(const Tensor& dy, int ca, Tensor* da, Tensor* db) {
  const int cb = dy.c - ca;
  *da = Tensor(dy.n, ca, dy.h, dy.w);
  *db = Tensor(dy.n, cb, dy.h, dy.w);
  const size_t pa = static_cast<size_t>(ca) * dy.plane();
  const size_t pb = static_cast<size_t>(cb) * dy.plane();
  for (int i = 0; i < dy.n; ++i) {
    std::copy(dy.sample(i), dy.sample(i) + pa, da->sample(i));
    std::copy(dy.sample(i) + pa, dy.sample(i) + pa + pb, db->sample(i));
  }
}

}  // namespace ageus
