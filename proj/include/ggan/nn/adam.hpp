#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ggan/nn/param.hpp"

namespace ggan {

/// Adam over a fixed parameter group. Defaults follow the BigGAN-style
/// adversarial setup: beta1 = 0, beta2 = 0.999.
template <typename T>
class Adam {
 public:
  Adam() = default;
  Adam(ParamRefs<T> params, double lr, double beta1 = 0.0, double beta2 = 0.999,
       double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (auto* p : params_) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }

  void step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Param<T>& p = *params_[i];
      Tensor<T>& m = m_[i];
      Tensor<T>& v = v_[i];
      const std::size_t n = p.value.numel();
      for (std::size_t j = 0; j < n; ++j) {
        const double g = static_cast<double>(p.grad[j]);
        const double mj = beta1_ * m[j] + (1.0 - beta1_) * g;
        const double vj = beta2_ * v[j] + (1.0 - beta2_) * g * g;
        m[j] = static_cast<T>(mj);
        v[j] = static_cast<T>(vj);
        const double mhat = mj / bc1;
        const double vhat = vj / bc2;
        p.value[j] -= static_cast<T>(lr_ * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }

  void zero_grad() {
    for (auto* p : params_) p->zero_grad();
  }

  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  std::int64_t steps() const { return t_; }

  /// Optimizer state for checkpointing: moment tensors plus step counter.
  std::vector<Tensor<T>*> moments() {
    std::vector<Tensor<T>*> out;
    for (auto& t : m_) out.push_back(&t);
    for (auto& t : v_) out.push_back(&t);
    return out;
  }
  std::int64_t& step_counter() { return t_; }

 private:
  ParamRefs<T> params_;
  std::vector<Tensor<T>> m_, v_;
  double lr_ = 1e-4, beta1_ = 0.0, beta2_ = 0.999, eps_ = 1e-8;
  std::int64_t t_ = 0;
};

}  // namespace ggan
