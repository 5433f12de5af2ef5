#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <vector>

#include "ggan/ops/gemm.hpp"
#include "ggan/tensor.hpp"

namespace ggan::ops {

// Direct NHWC convolution, stride 1, square-ish kernels with symmetric zero
// padding (pad = K/2 gives "same"). Resampling is separate (see pool.hpp).

namespace serial {

template <typename T>
void conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const T* bias, int pad,
                    Tensor<T>& y) {
  const std::size_t N = x.dim(0), H = x.dim(1), W = x.dim(2), CI = x.dim(3);
  const std::size_t KH = w.dim(0), KW = w.dim(1), CO = w.dim(3);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t ww = 0; ww < W; ++ww)
        for (std::size_t co = 0; co < CO; ++co) {
          T acc = bias ? bias[co] : T(0);
          for (std::size_t kh = 0; kh < KH; ++kh) {
            const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(h + kh) - pad;
            if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(H)) continue;
            for (std::size_t kw = 0; kw < KW; ++kw) {
              const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ww + kw) - pad;
              if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(W)) continue;
              for (std::size_t ci = 0; ci < CI; ++ci)
                acc += x.at(n, ih, iw, ci) * w.at(kh, kw, ci, co);
            }
          }
          y.at(n, h, ww, co) = acc;
        }
}

template <typename T>
void conv2d_backward_input(const Tensor<T>& gy, const Tensor<T>& w, int pad, Tensor<T>& gx) {
  const std::size_t N = gx.dim(0), H = gx.dim(1), W = gx.dim(2), CI = gx.dim(3);
  const std::size_t KH = w.dim(0), KW = w.dim(1), CO = w.dim(3);
  // weights transposed to [kh][kw][co][ci] so the inner loop is a ci-axpy
  std::vector<T> wt(KH * KW * CO * CI);
  for (std::size_t kh = 0; kh < KH; ++kh)
    for (std::size_t kw = 0; kw < KW; ++kw)
      for (std::size_t ci = 0; ci < CI; ++ci)
        for (std::size_t co = 0; co < CO; ++co)
          wt[((kh * KW + kw) * CO + co) * CI + ci] = w.at(kh, kw, ci, co);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t ww = 0; ww < W; ++ww) {
        T* gp = &gx.at(n, h, ww, 0);
        for (std::size_t ci = 0; ci < CI; ++ci) gp[ci] = T(0);
        for (std::size_t kh = 0; kh < KH; ++kh) {
          // output position that read input (h, ww) through tap kh
          const std::ptrdiff_t oh = static_cast<std::ptrdiff_t>(h) + pad - kh;
          if (oh < 0 || oh >= static_cast<std::ptrdiff_t>(H)) continue;
          for (std::size_t kw = 0; kw < KW; ++kw) {
            const std::ptrdiff_t ow = static_cast<std::ptrdiff_t>(ww) + pad - kw;
            if (ow < 0 || ow >= static_cast<std::ptrdiff_t>(W)) continue;
            const T* gyp = &gy.at(n, oh, ow, 0);
            for (std::size_t co = 0; co < CO; ++co) {
              const T gv = gyp[co];
              const T* wp = wt.data() + ((kh * KW + kw) * CO + co) * CI;
              for (std::size_t ci = 0; ci < CI; ++ci) gp[ci] += gv * wp[ci];
            }
          }
        }
      }
}

template <typename T>
void conv2d_backward_weights(const Tensor<T>& x, const Tensor<T>& gy, int pad, Tensor<T>& gw,
                             T* gbias) {
  const std::size_t N = x.dim(0), H = x.dim(1), W = x.dim(2), CI = x.dim(3);
  const std::size_t KH = gw.dim(0), KW = gw.dim(1), CO = gw.dim(3);
  for (std::size_t kh = 0; kh < KH; ++kh)
    for (std::size_t kw = 0; kw < KW; ++kw)
      for (std::size_t ci = 0; ci < CI; ++ci)
        for (std::size_t n = 0; n < N; ++n)
          for (std::size_t h = 0; h < H; ++h) {
            const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(h + kh) - pad;
            if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(H)) continue;
            for (std::size_t ww = 0; ww < W; ++ww) {
              const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ww + kw) - pad;
              if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(W)) continue;
              const T xv = x.at(n, ih, iw, ci);
              T* g = &gw.at(kh, kw, ci, 0);
              const T* gyp = &gy.at(n, h, ww, 0);
              for (std::size_t co = 0; co < CO; ++co) g[co] += xv * gyp[co];
            }
          }
  if (gbias) {
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t h = 0; h < H; ++h)
        for (std::size_t ww = 0; ww < W; ++ww) {
          const T* gyp = &gy.at(n, h, ww, 0);
          for (std::size_t co = 0; co < CO; ++co) gbias[co] += gyp[co];
        }
  }
}

}  // namespace serial

template <typename T>
void conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const T* bias, int pad,
                    Tensor<T>& y) {
  const std::size_t N = x.dim(0), H = x.dim(1), W = x.dim(2), CI = x.dim(3);
  const std::size_t KH = w.dim(0), KW = w.dim(1), CO = w.dim(3);
  if (CO < 8) {
    // few output channels cannot fill vector lanes; run the wide path on a
    // zero-padded weight and slice. Each real output element sees the same
    // accumulation order, so results match the unpadded computation.
    constexpr std::size_t kPad = 8;
    Tensor<T> wpad({KH, KW, CI, kPad});
    for (std::size_t kh = 0; kh < KH; ++kh)
      for (std::size_t kw = 0; kw < KW; ++kw)
        for (std::size_t ci = 0; ci < CI; ++ci)
          for (std::size_t co = 0; co < CO; ++co) wpad.at(kh, kw, ci, co) = w.at(kh, kw, ci, co);
    std::vector<T> bpad(kPad, T(0));
    if (bias)
      for (std::size_t co = 0; co < CO; ++co) bpad[co] = bias[co];
    Tensor<T> ypad({N, H, W, kPad});
    conv2d_forward(x, wpad, bias ? bpad.data() : nullptr, pad, ypad);
    const std::size_t positions = N * H * W;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(positions); ++p)
      for (std::size_t co = 0; co < CO; ++co) y[p * CO + co] = ypad[p * kPad + co];
    return;
  }
  constexpr std::size_t kMaxAcc = 512;
  const T* __restrict xd = x.data();
  const T* __restrict wd = w.data();
  T* __restrict yd = y.data();
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(N); ++n)
    for (std::ptrdiff_t h = 0; h < static_cast<std::ptrdiff_t>(H); ++h) {
      T acc[kMaxAcc];
      std::vector<T> spill;  // only for very wide layers
      T* const a = CO <= kMaxAcc ? acc : (spill.resize(CO), spill.data());
      for (std::size_t ww = 0; ww < W; ++ww) {
        for (std::size_t co = 0; co < CO; ++co) a[co] = bias ? bias[co] : T(0);
        for (std::size_t kh = 0; kh < KH; ++kh) {
          const std::ptrdiff_t ih = h + static_cast<std::ptrdiff_t>(kh) - pad;
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(H)) continue;
          for (std::size_t kw = 0; kw < KW; ++kw) {
            const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ww + kw) - pad;
            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(W)) continue;
            const T* __restrict xp = xd + ((n * H + ih) * W + iw) * CI;
            const T* __restrict wb = wd + (kh * KW + kw) * CI * CO;
            for (std::size_t ci = 0; ci < CI; ++ci) {
              const T xv = xp[ci];
              const T* __restrict wp = wb + ci * CO;
              for (std::size_t co = 0; co < CO; ++co) a[co] += xv * wp[co];
            }
          }
        }
        T* __restrict yp = yd + ((n * H + h) * W + ww) * CO;
        for (std::size_t co = 0; co < CO; ++co) yp[co] = a[co];
      }
    }
}

template <typename T>
void conv2d_backward_input(const Tensor<T>& gy, const Tensor<T>& w, int pad, Tensor<T>& gx) {
  const std::size_t N = gx.dim(0), H = gx.dim(1), W = gx.dim(2), CI = gx.dim(3);
  const std::size_t KH = w.dim(0), KW = w.dim(1), CO = w.dim(3);
  std::vector<T> wt(KH * KW * CO * CI);
  for (std::size_t kh = 0; kh < KH; ++kh)
    for (std::size_t kw = 0; kw < KW; ++kw)
      for (std::size_t ci = 0; ci < CI; ++ci)
        for (std::size_t co = 0; co < CO; ++co)
          wt[((kh * KW + kw) * CO + co) * CI + ci] = w.at(kh, kw, ci, co);
  constexpr std::size_t kMaxAcc = 512;
  const T* __restrict gyd = gy.data();
  const T* __restrict wtd = wt.data();
  T* __restrict gxd = gx.data();
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(N); ++n)
    for (std::ptrdiff_t h = 0; h < static_cast<std::ptrdiff_t>(H); ++h) {
      T acc[kMaxAcc];
      std::vector<T> spill;
      T* const a = CI <= kMaxAcc ? acc : (spill.resize(CI), spill.data());
      for (std::size_t ww = 0; ww < W; ++ww) {
        for (std::size_t ci = 0; ci < CI; ++ci) a[ci] = T(0);
        for (std::size_t kh = 0; kh < KH; ++kh) {
          const std::ptrdiff_t oh = h + pad - static_cast<std::ptrdiff_t>(kh);
          if (oh < 0 || oh >= static_cast<std::ptrdiff_t>(H)) continue;
          for (std::size_t kw = 0; kw < KW; ++kw) {
            const std::ptrdiff_t ow = static_cast<std::ptrdiff_t>(ww) + pad - kw;
            if (ow < 0 || ow >= static_cast<std::ptrdiff_t>(W)) continue;
            const T* __restrict gyp = gyd + ((n * H + oh) * W + ow) * CO;
            const T* __restrict wb = wtd + (kh * KW + kw) * CO * CI;
            for (std::size_t co = 0; co < CO; ++co) {
              const T gv = gyp[co];
              const T* __restrict wp = wb + co * CI;
              for (std::size_t ci = 0; ci < CI; ++ci) a[ci] += gv * wp[ci];
            }
          }
        }
        T* __restrict gp = gxd + ((n * H + h) * W + ww) * CI;
        for (std::size_t ci = 0; ci < CI; ++ci) gp[ci] = a[ci];
      }
    }
}

/// Accumulates into gw/gbias (callers zero them once per step). Implemented
/// as chunked im2col + A^T B products so neither x nor gy is re-streamed
/// per tap; chunk partials are added in fixed order, so results are
/// reproducible for any thread count (the summation tree differs from the
/// flat serial reference, so comparisons against it are to tolerance).
template <typename T>
void conv2d_backward_weights(const Tensor<T>& x, const Tensor<T>& gy, int pad, Tensor<T>& gw,
                             T* gbias) {
  const std::size_t N = x.dim(0), H = x.dim(1), W = x.dim(2), CI = x.dim(3);
  const std::size_t KH = gw.dim(0), KW = gw.dim(1), CO = gw.dim(3);
  const std::size_t taps = KH * KW * CI;
  const std::size_t positions = N * H * W;
  if (CO < 16) {
    // pad the few output channels with zero lanes (see conv2d_forward)
    constexpr std::size_t kPad = 16;
    Tensor<T> gypad({N, H, W, kPad});
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(positions); ++p)
      for (std::size_t co = 0; co < CO; ++co) gypad[p * kPad + co] = gy[p * CO + co];
    Tensor<T> gwpad({KH, KW, CI, kPad});
    conv2d_backward_weights(x, gypad, pad, gwpad, static_cast<T*>(nullptr));
    for (std::size_t t = 0; t < taps; ++t)
      for (std::size_t co = 0; co < CO; ++co) gw[t * CO + co] += gwpad[t * kPad + co];
    if (gbias) {
      for (std::size_t p = 0; p < positions; ++p) {
        const T* gyp = gy.data() + p * CO;
        for (std::size_t co = 0; co < CO; ++co) gbias[co] += gyp[co];
      }
    }
    return;
  }
  const std::size_t chunk = std::max<std::size_t>(std::size_t(256), (1u << 20) / taps);
  std::unique_ptr<T[]> col(new T[chunk * taps]);
  std::unique_ptr<T[]> partial(new T[taps * CO]);
  for (std::size_t begin = 0; begin < positions; begin += chunk) {
    const std::size_t end = std::min(positions, begin + chunk);
    const std::size_t rows = end - begin;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(rows); ++r) {
      const std::size_t pos = begin + r;
      const std::size_t n = pos / (H * W);
      const std::size_t h = (pos / W) % H;
      const std::size_t ww = pos % W;
      T* c = col.get() + r * taps;
      for (std::size_t kh = 0; kh < KH; ++kh) {
        const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(h + kh) - pad;
        for (std::size_t kw = 0; kw < KW; ++kw) {
          const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ww + kw) - pad;
          T* dst = c + (kh * KW + kw) * CI;
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(H) || iw < 0 ||
              iw >= static_cast<std::ptrdiff_t>(W)) {
            for (std::size_t ci = 0; ci < CI; ++ci) dst[ci] = T(0);
          } else {
            const T* src = &x.at(n, ih, iw, 0);
            for (std::size_t ci = 0; ci < CI; ++ci) dst[ci] = src[ci];
          }
        }
      }
    }
    matmul_tn(taps, CO, rows, col.get(), gy.data() + begin * CO, partial.get());
    for (std::size_t i = 0; i < taps * CO; ++i) gw[i] += partial[i];
  }
  if (gbias) {
    for (std::size_t p = 0; p < positions; ++p) {
      const T* gyp = gy.data() + p * CO;
      for (std::size_t co = 0; co < CO; ++co) gbias[co] += gyp[co];
    }
  }
}

}  // namespace ggan::ops
