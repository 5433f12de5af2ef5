#pragma once

#include <cstddef>
#include <vector>

namespace ggan::ops {

// Channel reductions over a (count, C) row-major view. The data is split
// into a fixed number of row chunks scanned row-major (cache-friendly) in
// parallel; chunk partials are combined serially in index order, so results
// are bit-identical for any thread count.

inline constexpr std::size_t kReduceChunks = 64;

/// sum[c] = sum_i x[i*C+c], sumsq[c] = sum_i x[i*C+c]^2 (sumsq optional).
template <typename T>
void channel_sums(const T* x, std::size_t count, std::size_t C, T* sum, T* sumsq) {
  const std::size_t chunks = count < kReduceChunks ? (count ? count : 1) : kReduceChunks;
  std::vector<T> partial(chunks * C, T(0));
  std::vector<T> partial_sq(sumsq ? chunks * C : 0, T(0));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(chunks); ++k) {
    const std::size_t lo = k * count / chunks, hi = (k + 1) * count / chunks;
    T* p = partial.data() + k * C;
    T* q = sumsq ? partial_sq.data() + k * C : nullptr;
    for (std::size_t i = lo; i < hi; ++i) {
      const T* row = x + i * C;
      for (std::size_t c = 0; c < C; ++c) p[c] += row[c];
      if (q)
        for (std::size_t c = 0; c < C; ++c) q[c] += row[c] * row[c];
    }
  }
  for (std::size_t c = 0; c < C; ++c) sum[c] = T(0);
  if (sumsq)
    for (std::size_t c = 0; c < C; ++c) sumsq[c] = T(0);
  for (std::size_t k = 0; k < chunks; ++k) {
    const T* p = partial.data() + k * C;
    for (std::size_t c = 0; c < C; ++c) sum[c] += p[c];
    if (sumsq) {
      const T* q = partial_sq.data() + k * C;
      for (std::size_t c = 0; c < C; ++c) sumsq[c] += q[c];
    }
  }
}

/// sum_a[c] = sum_i a[i*C+c], sum_ab[c] = sum_i a[i*C+c] * b[i*C+c].
template <typename T>
void channel_pair_sums(const T* a, const T* b, std::size_t count, std::size_t C, T* sum_a,
                       T* sum_ab) {
  const std::size_t chunks = count < kReduceChunks ? (count ? count : 1) : kReduceChunks;
  std::vector<T> pa(chunks * C, T(0)), pab(chunks * C, T(0));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(chunks); ++k) {
    const std::size_t lo = k * count / chunks, hi = (k + 1) * count / chunks;
    T* x = pa.data() + k * C;
    T* y = pab.data() + k * C;
    for (std::size_t i = lo; i < hi; ++i) {
      const T* ra = a + i * C;
      const T* rb = b + i * C;
      for (std::size_t c = 0; c < C; ++c) {
        x[c] += ra[c];
        y[c] += ra[c] * rb[c];
      }
    }
  }
  for (std::size_t c = 0; c < C; ++c) {
    sum_a[c] = T(0);
    sum_ab[c] = T(0);
  }
  for (std::size_t k = 0; k < chunks; ++k) {
    const T* x = pa.data() + k * C;
    const T* y = pab.data() + k * C;
    for (std::size_t c = 0; c < C; ++c) {
      sum_a[c] += x[c];
      sum_ab[c] += y[c];
    }
  }
}

}  // namespace ggan::ops
