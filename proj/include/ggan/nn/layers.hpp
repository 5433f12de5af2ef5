#pragma once

#include <cassert>
#include <stdexcept>
#include <string>

#include "ggan/ops/conv.hpp"
#include "ggan/ops/eltwise.hpp"
#include "ggan/ops/gemm.hpp"
#include "ggan/ops/reduce.hpp"
#include "ggan/nn/param.hpp"

namespace ggan {

/// Spectral normalization state for one weight viewed as a (rows, cols)
/// row-major matrix. One persistent power-iteration pair (u, v) per weight;
/// one iteration per training step. The normalized weight is
/// W / (u^T W v + eps) with u, v treated as constants by the gradient.
template <typename T>
struct SpectralNorm {
  bool enabled = false;
  Tensor<T> u, v;
  static constexpr double kEps = 1e-12;

  void init(std::size_t rows, std::size_t cols, const T* w, Rng& rng) {
    enabled = true;
    u = Tensor<T>({rows});
    v = Tensor<T>({cols});
    for (std::size_t i = 0; i < rows; ++i) u[i] = static_cast<T>(rng.normal());
    normalize(u.data(), rows);
    // populate v from the initial weight
    mat_tvec(w, rows, cols, u.data(), v.data());
    normalize(v.data(), cols);
  }

  void power_iterate(const T* w, std::size_t rows, std::size_t cols) {
    mat_tvec(w, rows, cols, u.data(), v.data());
    normalize(v.data(), cols);
    mat_vec(w, rows, cols, v.data(), u.data());
    normalize(u.data(), rows);
  }

  T sigma(const T* w, std::size_t rows, std::size_t cols) const {
    // u^T W v
    T s = T(0);
    for (std::size_t r = 0; r < rows; ++r) {
      const T* wr = w + r * cols;
      T acc = T(0);
      for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * v[c];
      s += u[r] * acc;
    }
    return s;
  }

  static void normalize(T* x, std::size_t n) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += double(x[i]) * double(x[i]);
    const T inv = static_cast<T>(1.0 / (std::sqrt(s) + kEps));
    for (std::size_t i = 0; i < n; ++i) x[i] *= inv;
  }

 private:
  static void mat_vec(const T* w, std::size_t rows, std::size_t cols, const T* x, T* y) {
    for (std::size_t r = 0; r < rows; ++r) {
      const T* wr = w + r * cols;
      T acc = T(0);
      for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
      y[r] = acc;
    }
  }
  static void mat_tvec(const T* w, std::size_t rows, std::size_t cols, const T* x, T* y) {
    for (std::size_t c = 0; c < cols; ++c) y[c] = T(0);
    for (std::size_t r = 0; r < rows; ++r) {
      const T xr = x[r];
      const T* wr = w + r * cols;
      for (std::size_t c = 0; c < cols; ++c) y[c] += xr * wr[c];
    }
  }
};

namespace detail {

/// Shared by Dense and Conv2d: produce the effective weight and, in
/// backward, map the gradient w.r.t. the normalized weight back onto W.
template <typename T>
struct NormalizedWeight {
  T sigma_eps = T(1);

  Tensor<T> effective(const Tensor<T>& w, SpectralNorm<T>& sn, std::size_t rows,
                      std::size_t cols, Mode mode) {
    if (!sn.enabled) {
      sigma_eps = T(1);
      return w;
    }
    if (mode_updates_state(mode)) sn.power_iterate(w.data(), rows, cols);
    sigma_eps = sn.sigma(w.data(), rows, cols) + static_cast<T>(SpectralNorm<T>::kEps);
    Tensor<T> wn = w;
    wn *= T(1) / sigma_eps;
    return wn;
  }

  /// gW = (gWn - <gWn, Wn> u v^T) / (sigma + eps), accumulated into out.
  void accumulate_grad(const Tensor<T>& g_wn, const Tensor<T>& wn, const SpectralNorm<T>& sn,
                       std::size_t rows, std::size_t cols, Tensor<T>& out) const {
    if (!sn.enabled) {
      for (std::size_t i = 0; i < out.numel(); ++i) out[i] += g_wn[i];
      return;
    }
    T dot = T(0);
    for (std::size_t i = 0; i < g_wn.numel(); ++i) dot += g_wn[i] * wn[i];
    const T inv = T(1) / sigma_eps;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        const std::size_t i = r * cols + c;
        out[i] += (g_wn[i] - dot * sn.u[r] * sn.v[c]) * inv;
      }
  }
};

}  // namespace detail

/// Fully connected layer, y = x W + b, W stored (in, out).
template <typename T>
class Dense {
 public:
  Dense() = default;
  Dense(std::size_t in, std::size_t out, bool spectral, Rng& rng, const std::string& name)
      : w_(name + ".w", {in, out}), b_(name + ".b", {out}), in_(in), out_(out) {
    glorot_init(w_.value, in, out, rng);
    if (spectral) sn_.init(in, out, w_.value.data(), rng);
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    assert(x.ndim() == 2 && x.dim(1) == in_);
    Tensor<T> wn = nw_.effective(w_.value, sn_, in_, out_, mode);
    const std::size_t n = x.dim(0);
    Tensor<T> y({n, out_});
    ops::matmul_nn(n, out_, in_, x.data(), wn.data(), y.data());
    for (std::size_t i = 0; i < n; ++i) {
      T* yr = y.data() + i * out_;
      for (std::size_t j = 0; j < out_; ++j) yr[j] += b_.value[j];
    }
    if (mode_caches(mode)) {
      x_ = x;
      wn_ = std::move(wn);
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const std::size_t n = gy.dim(0);
    Tensor<T> gx({n, in_});
    ops::matmul_nt(n, in_, out_, gy.data(), wn_.data(), gx.data());
    if (param_grads_enabled()) {
      Tensor<T> g_wn({in_, out_});
      ops::matmul_tn(in_, out_, n, x_.data(), gy.data(), g_wn.data());
      nw_.accumulate_grad(g_wn, wn_, sn_, in_, out_, w_.grad);
      for (std::size_t i = 0; i < n; ++i) {
        const T* gr = gy.data() + i * out_;
        for (std::size_t j = 0; j < out_; ++j) b_.grad[j] += gr[j];
      }
    }
    return gx;
  }

  void params(ParamRefs<T>& out) {
    out.push_back(&w_);
    out.push_back(&b_);
  }
  void state(StateRefs<T>& out) {
    if (sn_.enabled) {
      out.push_back(&sn_.u);
      out.push_back(&sn_.v);
    }
  }

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  Param<T>& weight() { return w_; }
  Param<T>& bias() { return b_; }
  SpectralNorm<T>& spectral_norm() { return sn_; }
  /// Effective (normalized) weight as of now, without state updates.
  Tensor<T> effective_weight() {
    detail::NormalizedWeight<T> nw;
    return nw.effective(w_.value, sn_, in_, out_, Mode::Eval);
  }

 private:
  Param<T> w_, b_;
  SpectralNorm<T> sn_;
  detail::NormalizedWeight<T> nw_;
  Tensor<T> x_, wn_;
  std::size_t in_ = 0, out_ = 0;
};

/// 3x3 ("same") or 1x1 convolution, NHWC, stride 1.
template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(std::size_t k, std::size_t ci, std::size_t co, bool spectral, Rng& rng,
         const std::string& name)
      : w_(name + ".w", {k, k, ci, co}), b_(name + ".b", {co}), k_(k), ci_(ci), co_(co),
        pad_(static_cast<int>(k / 2)) {
    glorot_init(w_.value, k * k * ci, k * k * co, rng);
    if (spectral) sn_.init(k * k * ci, co, w_.value.data(), rng);
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    assert(x.ndim() == 4);
    if (x.dim(3) != ci_)
      throw std::invalid_argument("conv2d: channel mismatch, got " + shape_string(x.shape()));
    Tensor<T> wn = nw_.effective(w_.value, sn_, k_ * k_ * ci_, co_, mode);
    Tensor<T> y({x.dim(0), x.dim(1), x.dim(2), co_});
    ops::conv2d_forward(x, wn, b_.value.data(), pad_, y);
    if (mode_caches(mode)) {
      x_ = x;
      wn_ = std::move(wn);
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(x_.shape());
    ops::conv2d_backward_input(gy, wn_, pad_, gx);
    if (param_grads_enabled()) {
      Tensor<T> g_wn(w_.value.shape());
      ops::conv2d_backward_weights(x_, gy, pad_, g_wn, static_cast<T*>(nullptr));
      nw_.accumulate_grad(g_wn, wn_, sn_, k_ * k_ * ci_, co_, w_.grad);
      const std::size_t rows = gy.numel() / co_;
      for (std::size_t r = 0; r < rows; ++r) {
        const T* gp = gy.data() + r * co_;
        for (std::size_t c = 0; c < co_; ++c) b_.grad[c] += gp[c];
      }
    }
    return gx;
  }

  void params(ParamRefs<T>& out) {
    out.push_back(&w_);
    out.push_back(&b_);
  }
  void state(StateRefs<T>& out) {
    if (sn_.enabled) {
      out.push_back(&sn_.u);
      out.push_back(&sn_.v);
    }
  }

  Param<T>& weight() { return w_; }
  SpectralNorm<T>& spectral_norm() { return sn_; }

 private:
  Param<T> w_, b_;
  SpectralNorm<T> sn_;
  detail::NormalizedWeight<T> nw_;
  Tensor<T> x_, wn_;
  std::size_t k_ = 0, ci_ = 0, co_ = 0;
  int pad_ = 0;
};

/// Batch normalization over NHWC channels. momentum 0.9, eps 1e-5.
template <typename T>
class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(std::size_t c, const std::string& name)
      : gamma_(name + ".gamma", {c}), beta_(name + ".beta", {c}), run_mean_({c}),
        run_var_({c}), c_(c) {
    gamma_.value.fill(T(1));
    run_var_.fill(T(1));
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    const std::size_t C = c_, count = x.numel() / C;
    Tensor<T> mean({C}), var({C});
    if (mode_batch_stats(mode)) {
      channel_moments(x, mean, var);
      if (mode_updates_state(mode)) {
        for (std::size_t c = 0; c < C; ++c) {
          run_mean_[c] = T(kMomentum) * run_mean_[c] + T(1 - kMomentum) * mean[c];
          run_var_[c] = T(kMomentum) * run_var_[c] + T(1 - kMomentum) * var[c];
        }
      }
    } else {
      mean = run_mean_;
      var = run_var_;
    }
    Tensor<T> inv_std({C});
    for (std::size_t c = 0; c < C; ++c)
      inv_std[c] = T(1) / std::sqrt(var[c] + T(kEps));
    Tensor<T> y(x.shape()), xhat(x.shape());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) {
      const T* xp = x.data() + i * C;
      T* hp = xhat.data() + i * C;
      T* yp = y.data() + i * C;
      for (std::size_t c = 0; c < C; ++c) {
        hp[c] = (xp[c] - mean[c]) * inv_std[c];
        yp[c] = gamma_.value[c] * hp[c] + beta_.value[c];
      }
    }
    if (mode_caches(mode)) {
      xhat_ = std::move(xhat);
      inv_std_ = std::move(inv_std);
      used_batch_stats_ = mode_batch_stats(mode);
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const std::size_t C = c_, count = gy.numel() / C;
    // per-channel sums of gy and gy*xhat
    Tensor<T> sum_gy({C}), sum_gyh({C});
    ops::channel_pair_sums(gy.data(), xhat_.data(), count, C, sum_gy.data(), sum_gyh.data());
    if (param_grads_enabled()) {
      for (std::size_t c = 0; c < C; ++c) {
        gamma_.grad[c] += sum_gyh[c];
        beta_.grad[c] += sum_gy[c];
      }
    }
    Tensor<T> gx(gy.shape());
    const T invn = T(1) / static_cast<T>(count);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) {
      const T* gp = gy.data() + i * C;
      const T* hp = xhat_.data() + i * C;
      T* op = gx.data() + i * C;
      for (std::size_t c = 0; c < C; ++c) {
        const T ghat = gp[c] * gamma_.value[c];
        if (used_batch_stats_) {
          op[c] = inv_std_[c] *
                  (ghat - gamma_.value[c] * invn * (sum_gy[c] + hp[c] * sum_gyh[c]));
        } else {
          op[c] = ghat * inv_std_[c];
        }
      }
    }
    return gx;
  }

  void params(ParamRefs<T>& out) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
  }
  void state(StateRefs<T>& out) {
    out.push_back(&run_mean_);
    out.push_back(&run_var_);
  }

  Param<T>& gamma() { return gamma_; }
  Param<T>& beta() { return beta_; }

  static constexpr double kMomentum = 0.9;
  static constexpr double kEps = 1e-5;

 private:
  void channel_moments(const Tensor<T>& x, Tensor<T>& mean, Tensor<T>& var) const {
    const std::size_t C = c_, count = x.numel() / C;
    Tensor<T> sum({C}), sumsq({C});
    ops::channel_sums(x.data(), count, C, sum.data(), sumsq.data());
    for (std::size_t c = 0; c < C; ++c) {
      const T mu = sum[c] / static_cast<T>(count);
      mean[c] = mu;
      var[c] = sumsq[c] / static_cast<T>(count) - mu * mu;
      if (var[c] < T(0)) var[c] = T(0);  // roundoff guard
    }
  }

  Param<T> gamma_, beta_;
  Tensor<T> run_mean_, run_var_;
  Tensor<T> xhat_, inv_std_;
  bool used_batch_stats_ = true;
  std::size_t c_ = 0;
};

/// Class-conditional batch normalization. Channel statistics are shared
/// across the batch as in plain BN; gain and bias are affine functions of a
/// per-sample class embedding: gamma = 1 + e Wg, beta = e Wb.
template <typename T>
class ConditionalBatchNorm {
 public:
  ConditionalBatchNorm() = default;
  ConditionalBatchNorm(std::size_t c, std::size_t embed_dim, const std::string& name)
      : wg_(name + ".wg", {embed_dim, c}), wb_(name + ".wb", {embed_dim, c}), run_mean_({c}),
        run_var_({c}), c_(c), e_(embed_dim) {
    // zero-init keeps gamma at exactly 1 and beta at 0 until trained
    run_var_.fill(T(1));
  }

  Tensor<T> forward(const Tensor<T>& x, const Tensor<T>& embed, Mode mode) {
    const std::size_t C = c_, N = x.dim(0), hw = x.dim(1) * x.dim(2);
    assert(embed.dim(0) == N && embed.dim(1) == e_);
    Tensor<T> mean({C}), var({C});
    if (mode_batch_stats(mode)) {
      moments(x, mean, var);
      if (mode_updates_state(mode)) {
        for (std::size_t c = 0; c < C; ++c) {
          run_mean_[c] = T(BatchNorm<T>::kMomentum) * run_mean_[c] +
                         T(1 - BatchNorm<T>::kMomentum) * mean[c];
          run_var_[c] = T(BatchNorm<T>::kMomentum) * run_var_[c] +
                        T(1 - BatchNorm<T>::kMomentum) * var[c];
        }
      }
    } else {
      mean = run_mean_;
      var = run_var_;
    }
    Tensor<T> inv_std({C});
    for (std::size_t c = 0; c < C; ++c)
      inv_std[c] = T(1) / std::sqrt(var[c] + T(BatchNorm<T>::kEps));
    // per-sample gains/biases
    Tensor<T> gamma({N, C}), beta({N, C});
    ops::matmul_nn(N, C, e_, embed.data(), wg_.value.data(), gamma.data());
    ops::matmul_nn(N, C, e_, embed.data(), wb_.value.data(), beta.data());
    for (std::size_t i = 0; i < gamma.numel(); ++i) gamma[i] += T(1);
    Tensor<T> y(x.shape()), xhat(x.shape());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(N); ++n)
      for (std::size_t p = 0; p < hw; ++p) {
        const std::size_t off = (n * hw + p) * C;
        for (std::size_t c = 0; c < C; ++c) {
          xhat[off + c] = (x[off + c] - mean[c]) * inv_std[c];
          y[off + c] = gamma.at(n, c) * xhat[off + c] + beta.at(n, c);
        }
      }
    if (mode_caches(mode)) {
      xhat_ = std::move(xhat);
      inv_std_ = std::move(inv_std);
      gamma_cache_ = std::move(gamma);
      embed_ = embed;
      used_batch_stats_ = mode_batch_stats(mode);
    }
    return y;
  }

  /// Returns (gx, gembed).
  std::pair<Tensor<T>, Tensor<T>> backward(const Tensor<T>& gy) {
    const std::size_t C = c_, N = gy.dim(0), hw = gy.dim(1) * gy.dim(2);
    const std::size_t count = N * hw;
    Tensor<T> dgamma({N, C}), dbeta({N, C});
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(N); ++n)
      for (std::size_t c = 0; c < C; ++c) {
        T sg = T(0), sb = T(0);
        for (std::size_t p = 0; p < hw; ++p) {
          const std::size_t i = (n * hw + p) * C + c;
          sg += gy[i] * xhat_[i];
          sb += gy[i];
        }
        dgamma.at(n, c) = sg;
        dbeta.at(n, c) = sb;
      }
    if (param_grads_enabled()) {
      Tensor<T> gwg({e_, c_}), gwb({e_, c_});
      ops::matmul_tn(e_, c_, N, embed_.data(), dgamma.data(), gwg.data());
      ops::matmul_tn(e_, c_, N, embed_.data(), dbeta.data(), gwb.data());
      wg_.grad += gwg;
      wb_.grad += gwb;
    }
    Tensor<T> gembed({N, e_});
    {
      Tensor<T> t({N, e_});
      ops::matmul_nt(N, e_, C, dgamma.data(), wg_.value.data(), gembed.data());
      ops::matmul_nt(N, e_, C, dbeta.data(), wb_.value.data(), t.data());
      gembed += t;
    }
    // statistics backward, per channel over the whole batch
    Tensor<T> sum_gh({C}), sum_ghh({C});
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(C); ++c) {
      T sg = T(0), sgh = T(0);
      for (std::size_t n = 0; n < N; ++n)
        for (std::size_t p = 0; p < hw; ++p) {
          const std::size_t i = (n * hw + p) * C + c;
          const T ghat = gy[i] * gamma_cache_.at(n, c);
          sg += ghat;
          sgh += ghat * xhat_[i];
        }
      sum_gh[c] = sg;
      sum_ghh[c] = sgh;
    }
    Tensor<T> gx(gy.shape());
    const T invn = T(1) / static_cast<T>(count);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(N); ++n)
      for (std::size_t p = 0; p < hw; ++p) {
        const std::size_t off = (n * hw + p) * C;
        for (std::size_t c = 0; c < C; ++c) {
          const T ghat = gy[off + c] * gamma_cache_.at(n, c);
          if (used_batch_stats_) {
            gx[off + c] =
                inv_std_[c] * (ghat - invn * (sum_gh[c] + xhat_[off + c] * sum_ghh[c]));
          } else {
            gx[off + c] = ghat * inv_std_[c];
          }
        }
      }
    return {std::move(gx), std::move(gembed)};
  }

  void params(ParamRefs<T>& out) {
    out.push_back(&wg_);
    out.push_back(&wb_);
  }
  void state(StateRefs<T>& out) {
    out.push_back(&run_mean_);
    out.push_back(&run_var_);
  }

  Param<T>& wg() { return wg_; }
  Param<T>& wb() { return wb_; }

 private:
  void moments(const Tensor<T>& x, Tensor<T>& mean, Tensor<T>& var) const {
    const std::size_t C = c_, count = x.numel() / C;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(C); ++c) {
      T s = T(0);
      for (std::size_t i = 0; i < count; ++i) s += x[i * C + c];
      const T mu = s / static_cast<T>(count);
      T v = T(0);
      for (std::size_t i = 0; i < count; ++i) {
        const T d = x[i * C + c] - mu;
        v += d * d;
      }
      mean[c] = mu;
      var[c] = v / static_cast<T>(count);
    }
  }

  Param<T> wg_, wb_;
  Tensor<T> run_mean_, run_var_;
  Tensor<T> xhat_, inv_std_, gamma_cache_, embed_;
  bool used_batch_stats_ = true;
  std::size_t c_ = 0, e_ = 0;
};

template <typename T>
class Relu {
 public:
  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    Tensor<T> y(x.shape());
    ops::relu_forward(x, y);
    if (mode_caches(mode)) x_ = x;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(gy.shape());
    ops::relu_backward(gy, x_, gx);
    return gx;
  }

 private:
  Tensor<T> x_;
};

template <typename T>
class Tanh {
 public:
  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    Tensor<T> y(x.shape());
    ops::tanh_forward(x, y);
    if (mode_caches(mode)) y_ = y;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy) {
    Tensor<T> gx(gy.shape());
    ops::tanh_backward(gy, y_, gx);
    return gx;
  }

 private:
  Tensor<T> y_;
};

/// Class-embedding lookup table.
template <typename T>
class Embedding {
 public:
  Embedding() = default;
  Embedding(std::size_t n_classes, std::size_t dim, Rng& rng, const std::string& name)
      : table_(name, {n_classes, dim}), dim_(dim) {
    normal_init(table_.value, 0.02, rng);
  }

  Tensor<T> forward(const std::vector<int>& labels) {
    Tensor<T> out({labels.size(), dim_});
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= table_.value.dim(0))
        throw std::out_of_range("embedding: label out of range");
      for (std::size_t d = 0; d < dim_; ++d)
        out.at(i, d) = table_.value.at(static_cast<std::size_t>(labels[i]), d);
    }
    labels_ = labels;
    return out;
  }

  void backward(const Tensor<T>& gout) {
    if (!param_grads_enabled()) return;
    for (std::size_t i = 0; i < labels_.size(); ++i)
      for (std::size_t d = 0; d < dim_; ++d)
        table_.grad.at(static_cast<std::size_t>(labels_[i]), d) += gout.at(i, d);
  }

  void params(ParamRefs<T>& out) { out.push_back(&table_); }
  Param<T>& table() { return table_; }
  std::size_t dim() const { return dim_; }

 private:
  Param<T> table_;
  std::vector<int> labels_;
  std::size_t dim_ = 0;
};

}  // namespace ggan
