#pragma once

#include <cassert>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "ggan/ops/eltwise.hpp"
#include "ggan/ops/fastmath.hpp"
#include "ggan/ops/gemm.hpp"
#include "ggan/nn/layers.hpp"
#include "ggan/nn/param.hpp"

namespace ggan {

/// Non-local block: single-head dot-product self-attention over all spatial
/// positions with channel bottlenecks C/8 (queries/keys) and C/2 (values),
/// added back through a zero-initialized scalar gate:
///   y = x + gamma * (softmax(Q K^T) V) Wo
/// With gamma = 0 the block is exactly the identity.
///
/// The P x P attention matrix is never materialized: rows are processed in
/// query tiles, with per-row softmax statistics kept so the backward pass
/// recomputes each tile bit-identically. The value path is lane-padded to
/// at least 8 channels; the zero lanes never affect real outputs.
template <typename T>
class NonLocalBlock {
 public:
  NonLocalBlock() = default;
  NonLocalBlock(std::size_t c, bool spectral, Rng& rng, const std::string& name)
      : wq_(name + ".wq", {c, c / 8}), wk_(name + ".wk", {c, c / 8}),
        wv_(name + ".wv", {c, c / 2}), wo_(name + ".wo", {c / 2, c}),
        gamma_(name + ".gamma", {1}), c_(c), ck_(c / 8), cv_(c / 2) {
    if (c % 8 != 0) throw std::invalid_argument("non-local block: channels must divide by 8");
    glorot_init(wq_.value, c, ck_, rng);
    glorot_init(wk_.value, c, ck_, rng);
    glorot_init(wv_.value, c, cv_, rng);
    glorot_init(wo_.value, cv_, c, rng);
    if (spectral) {
      snq_.init(c, ck_, wq_.value.data(), rng);
      snk_.init(c, ck_, wk_.value.data(), rng);
      snv_.init(c, cv_, wv_.value.data(), rng);
      sno_.init(cv_, c, wo_.value.data(), rng);
    }
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    assert(x.ndim() == 4 && x.dim(3) == c_);
    const std::size_t n = x.dim(0), p = x.dim(1) * x.dim(2);
    const std::size_t cvp = padded_cv();
    Tensor<T> wq = nwq_.effective(wq_.value, snq_, c_, ck_, mode);
    Tensor<T> wk = nwk_.effective(wk_.value, snk_, c_, ck_, mode);
    Tensor<T> wv = pad_cols(nwv_.effective(wv_.value, snv_, c_, cv_, mode), c_, cv_, cvp);
    Tensor<T> wo = pad_rows(nwo_.effective(wo_.value, sno_, cv_, c_, mode), cv_, c_, cvp);

    q_.resize({n, p, ck_});
    k_.resize({n, p, ck_});
    v_.resize({n, p, cvp});
    av_.resize({n, p, cvp});
    rowmax_.resize({n, p});
    rowinv_.resize({n, p});
    Tensor<T> y(x.shape());
    const T g = gamma_.value[0];
    const std::size_t tile = tile_rows(p);
    // samples are independent; parallelize over them with serial kernels
#pragma omp parallel
    {
      std::vector<T> s(tile * p);
#pragma omp for schedule(static)
      for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        const T* xi = x.data() + i * p * c_;
        T* qi = q_.data() + i * p * ck_;
        T* ki = k_.data() + i * p * ck_;
        T* vi = v_.data() + i * p * cvp;
        T* avi = av_.data() + i * p * cvp;
        ops::serial::matmul_nn(p, ck_, c_, xi, wq.data(), qi);
        ops::serial::matmul_nn(p, ck_, c_, xi, wk.data(), ki);
        ops::serial::matmul_nn(p, cvp, c_, xi, wv.data(), vi);
        for (std::size_t t0 = 0; t0 < p; t0 += tile) {
          const std::size_t rows = std::min(tile, p - t0);
          ops::serial::matmul_nt(rows, p, ck_, qi + t0 * ck_, ki, s.data());
          softmax_tile(s.data(), rows, p, rowmax_.data() + i * p + t0,
                       rowinv_.data() + i * p + t0);
          ops::serial::matmul_nn(rows, cvp, p, s.data(), vi, avi + t0 * cvp);
        }
        std::vector<T> o(p * c_);
        ops::serial::matmul_nn(p, c_, cvp, avi, wo.data(), o.data());
        T* yi = y.data() + i * p * c_;
        for (std::size_t j = 0; j < p * c_; ++j) yi[j] = xi[j] + g * o[j];
      }
    }
    if (mode_caches(mode)) {
      x_ = x;
      wq_eff_ = std::move(wq);
      wk_eff_ = std::move(wk);
      wv_eff_ = std::move(wv);
      wo_eff_ = std::move(wo);
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy) {
    const std::size_t n = gy.dim(0), p = gy.dim(1) * gy.dim(2);
    const std::size_t cvp = padded_cv();
    const T g = gamma_.value[0];
    const bool want_wgrads = param_grads_enabled();
    const std::size_t tile = tile_rows(p);
    Tensor<T> gx = gy;
    // per-sample weight-gradient partials, reduced in sample order below
    Tensor<T> ggamma_n({n});
    Tensor<T> gwq_n({n, c_ * ck_}), gwk_n({n, c_ * ck_}), gwv_n({n, c_ * cvp}),
        gwo_n({n, cvp * c_});
#pragma omp parallel
    {
      std::vector<T> s(tile * p), gs(tile * p), part(p * std::max(ck_, cvp));
#pragma omp for schedule(static)
      for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        const T* xi = x_.data() + i * p * c_;
        const T* gyi = gy.data() + i * p * c_;
        const T* avi = av_.data() + i * p * cvp;
        const T* qi = q_.data() + i * p * ck_;
        const T* ki = k_.data() + i * p * ck_;
        const T* vi = v_.data() + i * p * cvp;
        const T* mx = rowmax_.data() + i * p;
        const T* inv = rowinv_.data() + i * p;
        // gamma: sum over gy .* O where O = av * Wo
        std::vector<T> o(p * c_);
        ops::serial::matmul_nn(p, c_, cvp, avi, wo_eff_.data(), o.data());
        T gg = T(0);
        for (std::size_t j = 0; j < p * c_; ++j) gg += gyi[j] * o[j];
        ggamma_n[i] = gg;
        // gO = gamma * gy;  gav = gO Wo^T ;  gWo partial = av^T gO
        std::vector<T> go(p * c_);
        for (std::size_t j = 0; j < p * c_; ++j) go[j] = g * gyi[j];
        std::vector<T> gav(p * cvp);
        ops::serial::matmul_nt(p, cvp, c_, go.data(), wo_eff_.data(), gav.data());
        if (want_wgrads)
          ops::serial::matmul_tn(cvp, c_, p, avi, go.data(), gwo_n.data() + i * cvp * c_);
        // attention tiles: recompute A rows exactly from the stored
        // softmax statistics, then backpropagate through them
        std::vector<T> gq(p * ck_), gk(p * ck_, T(0)), gv(p * cvp, T(0));
        for (std::size_t t0 = 0; t0 < p; t0 += tile) {
          const std::size_t rows = std::min(tile, p - t0);
          ops::serial::matmul_nt(rows, p, ck_, qi + t0 * ck_, ki, s.data());
          for (std::size_t r = 0; r < rows; ++r) {
            T* row = s.data() + r * p;
            const T m = mx[t0 + r], iv = inv[t0 + r];
            for (std::size_t j = 0; j < p; ++j) row[j] -= m;
            ops::exp_span(row, p);
            for (std::size_t j = 0; j < p; ++j) row[j] *= iv;
          }
          // gV partial: A_tile^T gav_tile
          ops::serial::matmul_tn(p, cvp, rows, s.data(), gav.data() + t0 * cvp, part.data());
          for (std::size_t j = 0; j < p * cvp; ++j) gv[j] += part[j];
          // gA tile then softmax backward in place
          ops::serial::matmul_nt(rows, p, cvp, gav.data() + t0 * cvp, vi, gs.data());
          for (std::size_t r = 0; r < rows; ++r) {
            const T* arow = s.data() + r * p;
            T* grow = gs.data() + r * p;
            T dot = T(0);
            for (std::size_t j = 0; j < p; ++j) dot += grow[j] * arow[j];
            for (std::size_t j = 0; j < p; ++j) grow[j] = arow[j] * (grow[j] - dot);
          }
          ops::serial::matmul_nn(rows, ck_, p, gs.data(), ki, gq.data() + t0 * ck_);
          // gK partial: gS_tile^T q_tile
          ops::serial::matmul_tn(p, ck_, rows, gs.data(), qi + t0 * ck_, part.data());
          for (std::size_t j = 0; j < p * ck_; ++j) gk[j] += part[j];
        }
        // input gradient via the three projections
        T* gxi = gx.data() + i * p * c_;
        std::vector<T> t1(p * c_);
        ops::serial::matmul_nt(p, c_, ck_, gq.data(), wq_eff_.data(), t1.data());
        for (std::size_t j = 0; j < p * c_; ++j) gxi[j] += t1[j];
        ops::serial::matmul_nt(p, c_, ck_, gk.data(), wk_eff_.data(), t1.data());
        for (std::size_t j = 0; j < p * c_; ++j) gxi[j] += t1[j];
        ops::serial::matmul_nt(p, c_, cvp, gv.data(), wv_eff_.data(), t1.data());
        for (std::size_t j = 0; j < p * c_; ++j) gxi[j] += t1[j];
        if (want_wgrads) {
          ops::serial::matmul_tn(c_, ck_, p, xi, gq.data(), gwq_n.data() + i * c_ * ck_);
          ops::serial::matmul_tn(c_, ck_, p, xi, gk.data(), gwk_n.data() + i * c_ * ck_);
          ops::serial::matmul_tn(c_, cvp, p, xi, gv.data(), gwv_n.data() + i * c_ * cvp);
        }
      }
    }
    if (want_wgrads) {
      Tensor<T> gwq({c_, ck_}), gwk({c_, ck_}), gwv({c_, cv_}), gwo({cv_, c_});
      T ggamma = T(0);
      for (std::size_t i = 0; i < n; ++i) {
        ggamma += ggamma_n[i];
        for (std::size_t j = 0; j < c_ * ck_; ++j) {
          gwq[j] += gwq_n[i * c_ * ck_ + j];
          gwk[j] += gwk_n[i * c_ * ck_ + j];
        }
        // slice the padded lanes away (they are exactly zero)
        for (std::size_t r = 0; r < c_; ++r)
          for (std::size_t j = 0; j < cv_; ++j)
            gwv[r * cv_ + j] += gwv_n[i * c_ * cvp + r * cvp + j];
        for (std::size_t r = 0; r < cv_; ++r)
          for (std::size_t j = 0; j < c_; ++j)
            gwo[r * c_ + j] += gwo_n[i * cvp * c_ + r * c_ + j];
      }
      gamma_.grad[0] += ggamma;
      Tensor<T> wv_real = slice_cols(wv_eff_, c_, cvp, cv_);
      Tensor<T> wo_real = slice_rows_mat(wo_eff_, cvp, c_, cv_);
      nwq_.accumulate_grad(gwq, wq_eff_, snq_, c_, ck_, wq_.grad);
      nwk_.accumulate_grad(gwk, wk_eff_, snk_, c_, ck_, wk_.grad);
      nwv_.accumulate_grad(gwv, wv_real, snv_, c_, cv_, wv_.grad);
      nwo_.accumulate_grad(gwo, wo_real, sno_, cv_, c_, wo_.grad);
    }
    return gx;
  }

  void params(ParamRefs<T>& out) {
    out.push_back(&wq_);
    out.push_back(&wk_);
    out.push_back(&wv_);
    out.push_back(&wo_);
    out.push_back(&gamma_);
  }
  void state(StateRefs<T>& out) {
    if (snq_.enabled) {
      out.push_back(&snq_.u);
      out.push_back(&snq_.v);
      out.push_back(&snk_.u);
      out.push_back(&snk_.v);
      out.push_back(&snv_.u);
      out.push_back(&snv_.v);
      out.push_back(&sno_.u);
      out.push_back(&sno_.v);
    }
  }

  /// Explicit attention matrix (N, P, P) for inspection and tests; the
  /// training path never materializes it.
  Tensor<T> attention_matrix(const Tensor<T>& x) {
    const std::size_t n = x.dim(0), p = x.dim(1) * x.dim(2);
    Tensor<T> wq = nwq_.effective(wq_.value, snq_, c_, ck_, Mode::Eval);
    Tensor<T> wk = nwk_.effective(wk_.value, snk_, c_, ck_, Mode::Eval);
    Tensor<T> a({n, p, p});
    std::vector<T> q(p * ck_), k(p * ck_);
    for (std::size_t i = 0; i < n; ++i) {
      const T* xi = x.data() + i * p * c_;
      ops::serial::matmul_nn(p, ck_, c_, xi, wq.data(), q.data());
      ops::serial::matmul_nn(p, ck_, c_, xi, wk.data(), k.data());
      T* ai = a.data() + i * p * p;
      ops::serial::matmul_nt(p, p, ck_, q.data(), k.data(), ai);
      std::vector<T> mx(p), inv(p);
      softmax_tile(ai, p, p, mx.data(), inv.data());
    }
    return a;
  }

  Param<T>& gate() { return gamma_; }

 private:
  std::size_t padded_cv() const { return cv_ < 8 ? 8 : cv_; }
  static std::size_t tile_rows(std::size_t p) { return p < 128 ? p : 128; }

  static void softmax_tile(T* s, std::size_t rows, std::size_t cols, T* mx_out, T* inv_out) {
    for (std::size_t r = 0; r < rows; ++r) {
      T* row = s + r * cols;
      T mx = row[0];
      for (std::size_t j = 1; j < cols; ++j) mx = row[j] > mx ? row[j] : mx;
      for (std::size_t j = 0; j < cols; ++j) row[j] -= mx;
      ops::exp_span(row, cols);
      T sum = T(0);
      for (std::size_t j = 0; j < cols; ++j) sum += row[j];
      const T inv = T(1) / sum;
      for (std::size_t j = 0; j < cols; ++j) row[j] *= inv;
      mx_out[r] = mx;
      inv_out[r] = inv;
    }
  }

  static Tensor<T> pad_cols(const Tensor<T>& m, std::size_t rows, std::size_t cols,
                            std::size_t cols_pad) {
    if (cols == cols_pad) return m;
    Tensor<T> out({rows, cols_pad});
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) out[r * cols_pad + c] = m[r * cols + c];
    return out;
  }
  static Tensor<T> pad_rows(const Tensor<T>& m, std::size_t rows, std::size_t cols,
                            std::size_t rows_pad) {
    if (rows == rows_pad) return m;
    Tensor<T> out({rows_pad, cols});
    std::copy(m.data(), m.data() + rows * cols, out.data());
    return out;
  }
  static Tensor<T> slice_cols(const Tensor<T>& m, std::size_t rows, std::size_t cols_pad,
                              std::size_t cols) {
    if (cols == cols_pad) return m;
    Tensor<T> out({rows, cols});
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = m[r * cols_pad + c];
    return out;
  }
  static Tensor<T> slice_rows_mat(const Tensor<T>& m, std::size_t rows_pad, std::size_t cols,
                                  std::size_t rows) {
    if (rows == rows_pad) return m;
    Tensor<T> out({rows, cols});
    std::copy(m.data(), m.data() + rows * cols, out.data());
    return out;
  }

  Param<T> wq_, wk_, wv_, wo_, gamma_;
  SpectralNorm<T> snq_, snk_, snv_, sno_;
  detail::NormalizedWeight<T> nwq_, nwk_, nwv_, nwo_;
  Tensor<T> x_, q_, k_, v_, av_, rowmax_, rowinv_;
  Tensor<T> wq_eff_, wk_eff_, wv_eff_, wo_eff_;
  std::size_t c_ = 0, ck_ = 0, cv_ = 0;
};

}  // namespace ggan
