#pragma once

#include <cmath>
#include <cstddef>
#include <type_traits>

namespace ggan::ops {

// Float transcendental passes are written as plain elementwise loops over
// contiguous spans; with -fno-math-errno the compiler vectorizes them via
// libmvec (errno semantics are dropped, numerics are unchanged).

template <typename T>
inline void exp_span(T* data, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) data[j] = std::exp(data[j]);
}

/// tanh(x) = 1 - 2 / (exp(2x) + 1), computed in vector-friendly passes with
/// the argument clamped so exp never overflows.
template <typename T>
inline void tanh_span(const T* x, T* y, std::size_t n) {
  if constexpr (std::is_same_v<T, float>) {
    for (std::size_t j = 0; j < n; ++j) {
      float v = 2.0f * x[j];
      v = v < -18.0f ? -18.0f : (v > 18.0f ? 18.0f : v);
      y[j] = std::exp(v);
    }
    for (std::size_t j = 0; j < n; ++j) y[j] = 1.0f - 2.0f / (y[j] + 1.0f);
  } else {
    for (std::size_t j = 0; j < n; ++j) y[j] = std::tanh(x[j]);
  }
}

}  // namespace ggan::ops
