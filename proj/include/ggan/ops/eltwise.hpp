#pragma once

#include <omp.h>

#include <cmath>
#include <cstddef>

#include "ggan/ops/fastmath.hpp"
#include "ggan/tensor.hpp"

namespace ggan::ops {

template <typename T>
void relu_forward(const Tensor<T>& x, Tensor<T>& y) {
  const std::size_t n = x.numel();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_backward(const Tensor<T>& gy, const Tensor<T>& x, Tensor<T>& gx) {
  const std::size_t n = x.numel();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    gx[i] = x[i] > T(0) ? gy[i] : T(0);
}

template <typename T>
void tanh_forward(const Tensor<T>& x, Tensor<T>& y) {
  const std::size_t n = x.numel();
#pragma omp parallel
  {
    int tid = omp_get_thread_num(), nt = omp_get_num_threads();
    const std::size_t lo = n * tid / nt, hi = n * (tid + 1) / nt;
    tanh_span(x.data() + lo, y.data() + lo, hi - lo);
  }
}

template <typename T>
void tanh_backward(const Tensor<T>& gy, const Tensor<T>& y, Tensor<T>& gx) {
  const std::size_t n = y.numel();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
    gx[i] = gy[i] * (T(1) - y[i] * y[i]);
}

/// Row-wise softmax with max subtraction.
template <typename T>
void softmax_rows(const Tensor<T>& x, Tensor<T>& y) {
  const std::size_t N = x.dim(0), K = x.numel() / x.dim(0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(N); ++n) {
    const T* xr = x.data() + n * K;
    T* yr = y.data() + n * K;
    T mx = xr[0];
    for (std::size_t k = 1; k < K; ++k) mx = xr[k] > mx ? xr[k] : mx;
    for (std::size_t k = 0; k < K; ++k) yr[k] = xr[k] - mx;
    exp_span(yr, K);
    T sum = T(0);
    for (std::size_t k = 0; k < K; ++k) sum += yr[k];
    const T inv = T(1) / sum;
    for (std::size_t k = 0; k < K; ++k) yr[k] *= inv;
  }
}

/// Given p = softmax(x) rowwise and gy = dL/dp, compute dL/dx.
template <typename T>
void softmax_rows_backward(const Tensor<T>& gy, const Tensor<T>& p, Tensor<T>& gx) {
  const std::size_t N = p.dim(0), K = p.numel() / p.dim(0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(N); ++n) {
    const T* pr = p.data() + n * K;
    const T* gr = gy.data() + n * K;
    T* xr = gx.data() + n * K;
    T dot = T(0);
    for (std::size_t k = 0; k < K; ++k) dot += gr[k] * pr[k];
    for (std::size_t k = 0; k < K; ++k) xr[k] = pr[k] * (gr[k] - dot);
  }
}

}  // namespace ggan::ops
