#pragma once

#include <cstddef>
#include <stdexcept>

#include "ggan/tensor.hpp"

namespace ggan::ops {

namespace serial {

template <typename T>
void avgpool2x2_forward(const Tensor<T>& x, Tensor<T>& y) {
  const std::size_t N = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t h = 0; h < H / 2; ++h)
      for (std::size_t w = 0; w < W / 2; ++w)
        for (std::size_t c = 0; c < C; ++c)
          y.at(n, h, w, c) = (x.at(n, 2 * h, 2 * w, c) + x.at(n, 2 * h, 2 * w + 1, c) +
                              x.at(n, 2 * h + 1, 2 * w, c) + x.at(n, 2 * h + 1, 2 * w + 1, c)) *
                             T(0.25);
}

template <typename T>
void upsample_nearest2x_forward(const Tensor<T>& x, Tensor<T>& y) {
  const std::size_t N = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t h = 0; h < 2 * H; ++h)
      for (std::size_t w = 0; w < 2 * W; ++w)
        for (std::size_t c = 0; c < C; ++c) y.at(n, h, w, c) = x.at(n, h / 2, w / 2, c);
}

}  // namespace serial

template <typename T>
void avgpool2x2_forward(const Tensor<T>& x, Tensor<T>& y) {
  const std::size_t N = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
  if (H % 2 != 0 || W % 2 != 0) throw std::invalid_argument("avgpool2x2: odd spatial dims");
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(N); ++n)
    for (std::ptrdiff_t h = 0; h < static_cast<std::ptrdiff_t>(H / 2); ++h)
      for (std::size_t w = 0; w < W / 2; ++w)
        for (std::size_t c = 0; c < C; ++c)
          y.at(n, h, w, c) = (x.at(n, 2 * h, 2 * w, c) + x.at(n, 2 * h, 2 * w + 1, c) +
                              x.at(n, 2 * h + 1, 2 * w, c) + x.at(n, 2 * h + 1, 2 * w + 1, c)) *
                             T(0.25);
}

template <typename T>
void avgpool2x2_backward(const Tensor<T>& gy, Tensor<T>& gx) {
  const std::size_t N = gx.dim(0), H = gx.dim(1), W = gx.dim(2), C = gx.dim(3);
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(N); ++n)
    for (std::ptrdiff_t h = 0; h < static_cast<std::ptrdiff_t>(H); ++h)
      for (std::size_t w = 0; w < W; ++w)
        for (std::size_t c = 0; c < C; ++c)
          gx.at(n, h, w, c) = gy.at(n, h / 2, w / 2, c) * T(0.25);
}

template <typename T>
void upsample_nearest2x_forward(const Tensor<T>& x, Tensor<T>& y) {
  const std::size_t N = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(N); ++n)
    for (std::ptrdiff_t h = 0; h < static_cast<std::ptrdiff_t>(2 * H); ++h)
      for (std::size_t w = 0; w < 2 * W; ++w)
        for (std::size_t c = 0; c < C; ++c) y.at(n, h, w, c) = x.at(n, h / 2, w / 2, c);
}

template <typename T>
void upsample_nearest2x_backward(const Tensor<T>& gy, Tensor<T>& gx) {
  const std::size_t N = gx.dim(0), H = gx.dim(1), W = gx.dim(2), C = gx.dim(3);
#pragma omp parallel for collapse(2) schedule(static)
  for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(N); ++n)
    for (std::ptrdiff_t h = 0; h < static_cast<std::ptrdiff_t>(H); ++h)
      for (std::size_t w = 0; w < W; ++w)
        for (std::size_t c = 0; c < C; ++c)
          gx.at(n, h, w, c) = gy.at(n, 2 * h, 2 * w, c) + gy.at(n, 2 * h, 2 * w + 1, c) +
                              gy.at(n, 2 * h + 1, 2 * w, c) + gy.at(n, 2 * h + 1, 2 * w + 1, c);
}

/// (N,H,W,C) -> (N,C): sum over all spatial positions.
template <typename T>
void global_sum_pool_forward(const Tensor<T>& x, Tensor<T>& y) {
  const std::size_t N = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(N); ++n) {
    T* out = &y.at(static_cast<std::size_t>(n), 0);
    for (std::size_t c = 0; c < C; ++c) out[c] = T(0);
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w) {
        const T* xp = &x.at(n, h, w, 0);
        for (std::size_t c = 0; c < C; ++c) out[c] += xp[c];
      }
  }
}

template <typename T>
void global_sum_pool_backward(const Tensor<T>& gy, Tensor<T>& gx) {
  const std::size_t N = gx.dim(0), H = gx.dim(1), W = gx.dim(2), C = gx.dim(3);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(N); ++n)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t w = 0; w < W; ++w)
        for (std::size_t c = 0; c < C; ++c)
          gx.at(n, h, w, c) = gy.at(static_cast<std::size_t>(n), c);
}

}  // namespace ggan::ops
