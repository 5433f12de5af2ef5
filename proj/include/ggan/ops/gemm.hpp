#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <vector>

namespace ggan::ops {

// Matrix kernels. All matrices are dense row-major. The parallel versions
// split work over independent output rows only, so every output element is
// accumulated in a fixed serial order; results are bit-identical to the
// serial references for any thread count.

namespace serial {

/// C(M,N) = A(M,K) * B(K,N)
template <typename T>
void matmul_nn(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C) {
  for (std::size_t m = 0; m < M; ++m) {
    T* c = C + m * N;
    for (std::size_t n = 0; n < N; ++n) c[n] = T(0);
    for (std::size_t k = 0; k < K; ++k) {
      const T a = A[m * K + k];
      const T* b = B + k * N;
      for (std::size_t n = 0; n < N; ++n) c[n] += a * b[n];
    }
  }
}

/// C(M,N) = A(M,K) * B(N,K)^T
/// B is transposed up front so the inner loop is an n-wide axpy; strict-FP
/// dot loops cannot vectorize (reduction reassociation), axpy loops can.
template <typename T>
void matmul_nt(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C) {
  if (K == 1) {  // outer product; keep the n loop innermost and branch-free
    for (std::size_t m = 0; m < M; ++m) {
      const T a = A[m];
      T* c = C + m * N;
      for (std::size_t n = 0; n < N; ++n) c[n] = a * B[n];
    }
    return;
  }
  std::unique_ptr<T[]> bt(new T[K * N]);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t k = 0; k < K; ++k) bt[k * N + n] = B[n * K + k];
  matmul_nn(M, N, K, A, bt.get(), C);
}

/// C(M,N) = A(K,M)^T * B(K,N)
template <typename T>
void matmul_tn(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C) {
  for (std::size_t m = 0; m < M; ++m) {
    T* c = C + m * N;
    for (std::size_t n = 0; n < N; ++n) c[n] = T(0);
    for (std::size_t k = 0; k < K; ++k) {
      const T a = A[k * M + m];
      const T* b = B + k * N;
      for (std::size_t n = 0; n < N; ++n) c[n] += a * b[n];
    }
  }
}

}  // namespace serial

template <typename T>
void matmul_nn(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t m = 0; m < static_cast<std::ptrdiff_t>(M); ++m) {
    T* c = C + m * N;
    for (std::size_t n = 0; n < N; ++n) c[n] = T(0);
    for (std::size_t k = 0; k < K; ++k) {
      const T a = A[m * K + k];
      const T* b = B + k * N;
      for (std::size_t n = 0; n < N; ++n) c[n] += a * b[n];
    }
  }
}

template <typename T>
void matmul_nt(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C) {
  if (K == 1) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t m = 0; m < static_cast<std::ptrdiff_t>(M); ++m) {
      const T a = A[m];
      T* c = C + m * N;
      for (std::size_t n = 0; n < N; ++n) c[n] = a * B[n];
    }
    return;
  }
  std::unique_ptr<T[]> bt(new T[K * N]);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t n = 0; n < static_cast<std::ptrdiff_t>(N); ++n)
    for (std::size_t k = 0; k < K; ++k) bt[k * N + n] = B[n * K + k];
  matmul_nn(M, N, K, A, bt.get(), C);
}

template <typename T>
void matmul_tn(std::size_t M, std::size_t N, std::size_t K, const T* A, const T* B, T* C) {
  // blocked transpose of A turns its strided column walks into row scans;
  // K is tiled so the active slab of B stays cache-resident. Per-element
  // accumulation order over k is unchanged by either transform.
  std::unique_ptr<T[]> at(new T[M * K]);
  constexpr std::size_t kB = 32;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t m0 = 0; m0 < static_cast<std::ptrdiff_t>(M); m0 += kB)
    for (std::size_t k0 = 0; k0 < K; k0 += kB) {
      const std::size_t m1 = std::min(M, static_cast<std::size_t>(m0) + kB);
      const std::size_t k1 = std::min(K, k0 + kB);
      for (std::size_t k = k0; k < k1; ++k)
        for (std::size_t m = m0; m < m1; ++m) at[m * K + k] = A[k * M + m];
    }
  const std::size_t ktile = 512;
  for (std::size_t k0 = 0; k0 < K; k0 += ktile) {
    const std::size_t k1 = std::min(K, k0 + ktile);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t m = 0; m < static_cast<std::ptrdiff_t>(M); ++m) {
      const T* __restrict ar = at.get() + m * K;
      T* __restrict c = C + m * N;
      if (k0 == 0)
        for (std::size_t n = 0; n < N; ++n) c[n] = T(0);
      for (std::size_t k = k0; k < k1; ++k) {
        const T a = ar[k];
        const T* __restrict b = B + k * N;
        for (std::size_t n = 0; n < N; ++n) c[n] += a * b[n];
      }
    }
  }
}

}  // namespace ggan::ops
