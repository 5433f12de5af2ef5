#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "ggan/tensor.hpp"

namespace ggan::loss {

constexpr double kLogEps = 1e-12;

/// All thirteen per-iteration scalars, in minimization form.
template <typename T>
struct Bundle {
  T ec = 0, g1 = 0, g2 = 0, gc = 0, mg = 0, ecg = 0;
  T fg = 0, cl = 0, cg = 0, fc = 0;
  T d1 = 0, d2 = 0, df = 0;

  bool all_finite() const {
    for (T v : {ec, g1, g2, gc, mg, ecg, fg, cl, cg, fc, d1, d2, df})
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }
};

/// Mean softmax cross-entropy over rows, -sum y log(softmax(x) + eps).
template <typename T>
T cross_entropy(const Tensor<T>& logits, const Tensor<T>& onehot, Tensor<T>* dlogits = nullptr) {
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  if (onehot.dim(0) != n || onehot.dim(1) != k)
    throw std::invalid_argument("cross_entropy: shape mismatch");
  if (dlogits) *dlogits = Tensor<T>({n, k});
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const T* l = logits.data() + i * k;
    const T* y = onehot.data() + i * k;
    T mx = l[0];
    for (std::size_t j = 1; j < k; ++j) mx = l[j] > mx ? l[j] : mx;
    double z = 0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(static_cast<double>(l[j] - mx));
    double row = 0;
    for (std::size_t j = 0; j < k; ++j) {
      if (y[j] == T(0)) continue;
      const double p = std::exp(static_cast<double>(l[j] - mx)) / z;
      row -= static_cast<double>(y[j]) * std::log(p + kLogEps);
    }
    total += row;
    if (dlogits) {
      // d/dl of -sum_c y_c log(p_c + eps) = sum_c y_c * p_c/(p_c+eps) * (p - e_c)
      T* d = dlogits->data() + i * k;
      for (std::size_t j = 0; j < k; ++j) d[j] = T(0);
      for (std::size_t c = 0; c < k; ++c) {
        if (y[c] == T(0)) continue;
        const double pc = std::exp(static_cast<double>(l[c] - mx)) / z;
        const double s = static_cast<double>(y[c]) * pc / (pc + kLogEps);
        for (std::size_t j = 0; j < k; ++j) {
          const double pj = std::exp(static_cast<double>(l[j] - mx)) / z;
          d[j] += static_cast<T>(s * (pj - (j == c ? 1.0 : 0.0)) / static_cast<double>(n));
        }
      }
    }
  }
  return static_cast<T>(total / static_cast<double>(n));
}

/// Generator hinge term: just the negated critic score.
template <typename T>
T gen_hinge(T score) {
  return -score;
}

/// Mean of -scores with gradient.
template <typename T>
T gen_hinge_mean(const Tensor<T>& scores, Tensor<T>* dscores = nullptr) {
  const std::size_t n = scores.dim(0);
  if (dscores) {
    *dscores = Tensor<T>(scores.shape());
    dscores->fill(T(-1) / static_cast<T>(n));
  }
  double s = 0;
  for (std::size_t i = 0; i < scores.numel(); ++i) s -= static_cast<double>(scores[i]);
  return static_cast<T>(s / static_cast<double>(n));
}

/// Single-pair hinge, max(0, 1-real) + max(0, 1+fake).
template <typename T>
T disc_hinge(T real_score, T fake_score) {
  const T a = T(1) - real_score, b = T(1) + fake_score;
  return (a > T(0) ? a : T(0)) + (b > T(0) ? b : T(0));
}

/// Batched hinge: mean over real rows plus mean over fake rows.
template <typename T>
T disc_hinge_mean(const Tensor<T>& real, const Tensor<T>& fake, Tensor<T>* dreal = nullptr,
                  Tensor<T>* dfake = nullptr) {
  const std::size_t nr = real.dim(0), nf = fake.dim(0);
  if (dreal) *dreal = Tensor<T>(real.shape());
  if (dfake) *dfake = Tensor<T>(fake.shape());
  double s = 0;
  for (std::size_t i = 0; i < nr; ++i) {
    const T margin = T(1) - real[i];
    if (margin > T(0)) {
      s += static_cast<double>(margin) / nr;
      if (dreal) (*dreal)[i] = T(-1) / static_cast<T>(nr);
    }
  }
  for (std::size_t i = 0; i < nf; ++i) {
    const T margin = T(1) + fake[i];
    if (margin > T(0)) {
      s += static_cast<double>(margin) / nf;
      if (dfake) (*dfake)[i] = T(1) / static_cast<T>(nf);
    }
  }
  return static_cast<T>(s);
}

/// Mode divergence for one latent pair:
///   max{1, sum|d_x1 - d_x2| / (sum|d_xh1 - d_xh2| + alpha)}
/// The clamp has zero gradient below 1.
template <typename T>
T mode_divergence(const Tensor<T>& d_x1, const Tensor<T>& d_x2, const Tensor<T>& d_xh1,
                  const Tensor<T>& d_xh2, T alpha) {
  if (d_x1.numel() != d_x2.numel() || d_x1.numel() != d_xh1.numel() ||
      d_x1.numel() != d_xh2.numel())
    throw std::invalid_argument("mode_divergence: dim mismatch");
  double num = 0, den = static_cast<double>(alpha);
  for (std::size_t i = 0; i < d_x1.numel(); ++i) {
    num += std::abs(static_cast<double>(d_x1[i] - d_x2[i]));
    den += std::abs(static_cast<double>(d_xh1[i] - d_xh2[i]));
  }
  const double r = num / den;
  return static_cast<T>(r > 1.0 ? r : 1.0);
}

template <typename T>
double sgn(T v) {
  return v > T(0) ? 1.0 : (v < T(0) ? -1.0 : 0.0);
}

/// Batched over pairs (rows). Gradients are optional and cover all four
/// inputs; real-feature gradients exist for completeness even though the
/// training path never propagates them.
template <typename T>
T mode_divergence_mean(const Tensor<T>& d_x1, const Tensor<T>& d_x2, const Tensor<T>& d_xh1,
                       const Tensor<T>& d_xh2, T alpha, Tensor<T>* gd_x1 = nullptr,
                       Tensor<T>* gd_x2 = nullptr, Tensor<T>* gd_xh1 = nullptr,
                       Tensor<T>* gd_xh2 = nullptr) {
  const std::size_t m = d_x1.dim(0), f = d_x1.dim(1);
  if (d_x2.dim(0) != m || d_xh1.dim(0) != m || d_xh2.dim(0) != m || d_x2.dim(1) != f ||
      d_xh1.dim(1) != f || d_xh2.dim(1) != f)
    throw std::invalid_argument("mode_divergence: dim mismatch");
  for (Tensor<T>* g : {gd_x1, gd_x2, gd_xh1, gd_xh2})
    if (g) *g = Tensor<T>({m, f});
  double total = 0;
  for (std::size_t i = 0; i < m; ++i) {
    double num = 0, den = static_cast<double>(alpha);
    for (std::size_t j = 0; j < f; ++j) {
      num += std::abs(static_cast<double>(d_x1.at(i, j) - d_x2.at(i, j)));
      den += std::abs(static_cast<double>(d_xh1.at(i, j) - d_xh2.at(i, j)));
    }
    const double r = num / den;
    total += r > 1.0 ? r : 1.0;
    if (r > 1.0) {
      for (std::size_t j = 0; j < f; ++j) {
        const double sr = sgn(d_x1.at(i, j) - d_x2.at(i, j));
        const double sf = sgn(d_xh1.at(i, j) - d_xh2.at(i, j));
        const double gnum = sr / den / m;
        const double gden = -num / (den * den) * sf / m;
        if (gd_x1) gd_x1->at(i, j) = static_cast<T>(gnum);
        if (gd_x2) gd_x2->at(i, j) = static_cast<T>(-gnum);
        if (gd_xh1) gd_xh1->at(i, j) = static_cast<T>(gden);
        if (gd_xh2) gd_xh2->at(i, j) = static_cast<T>(-gden);
      }
    }
  }
  return static_cast<T>(total / static_cast<double>(m));
}

/// Combined generator-side objective: generation terms averaged, plus the
/// two classification terms.
template <typename T>
T ecg_loss(T g1, T g2, T mg, T ec, T gc) {
  return (g1 + g2 + mg) / T(3) + ec + gc;
}

/// Combined feature-side objective.
template <typename T>
T fc_loss(T cl, T cg, T fg) {
  return cl + cg + fg;
}

}  // namespace ggan::loss
