#pragma once

#include "ageus/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace ageus {

class Adam {
 public:
  explicit Adam(const std::vector<Param*>& params, double lr = 1e-3, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8)
      : params_(params), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto* p : params) {
      m_.emplace_back(p->w.size(), 0.0);
      v_.emplace_back(p->w.size(), 0.0);
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < params_.size(); ++i) {
      auto& w = params_[i]->w;
      const auto& g = params_[i]->g;
      for (size_t k = 0; k < w.size(); ++k) {
        m_[i][k] = beta1_ * m_[i][k] + (1.0 - beta1_) * g[k];
        v_[i][k] = beta2_ * v_[i][k] + (1.0 - beta2_) * g[k] * g[k];
        w[k] -= lr_ * (m_[i][k] / bc1) / (std::sqrt(v_[i][k] / bc2) + eps_);
      }
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  // serialization hooks for checkpoint resume
  int64_t steps() const { return t_; }
  const std::vector<std::vector<double>>& m() const { return m_; }
  const std::vector<std::vector<double>>& v() const { return v_; }
  void restore(int64_t t, std::vector<std::vector<double>> m, std::vector<std::vector<double>> v) {
    t_ = t;
    m_ = std::move(m);
    v_ = std::move(v);
  }

 private:
  std::vector<Param*> params_;
  double lr_, beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace ageus
