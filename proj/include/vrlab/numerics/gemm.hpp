#pragma once

#include <cstdint>

namespace vrlab {

// All kernels are written in saxpy form: the inner loop updates a contiguous
// output row with a scalar multiple of a contiguous input row. That shape
// auto-vectorizes under -O3 without any reassociation of float sums, which
// keeps results bit-reproducible.

// c[M,N] += a[M,K] * b[K,N]
template <typename T>
inline void gemm_nn_acc(const T* a, const T* b, T* c, int64_t M, int64_t K, int64_t N) {
  for (int64_t m = 0; m < M; ++m) {
    const T* arow = a + m * K;
    T* crow = c + m * N;
    for (int64_t k = 0; k < K; ++k) {
      const T s = arow[k];
      if (s == T(0)) continue;
      const T* brow = b + k * N;
      for (int64_t n = 0; n < N; ++n) crow[n] += s * brow[n];
    }
  }
}

// c[M,N] += a[K,M]^T * b[K,N]   (outer-product accumulation over K)
template <typename T>
inline void gemm_tn_acc(const T* a, const T* b, T* c, int64_t M, int64_t K, int64_t N) {
  for (int64_t k = 0; k < K; ++k) {
    const T* arow = a + k * M;
    const T* brow = b + k * N;
    for (int64_t m = 0; m < M; ++m) {
      const T s = arow[m];
      if (s == T(0)) continue;
      T* crow = c + m * N;
      for (int64_t n = 0; n < N; ++n) crow[n] += s * brow[n];
    }
  }
}

// out[rows,cols] = in[cols,rows]^T
template <typename T>
inline void transpose(const T* in, T* out, int64_t rows, int64_t cols) {
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t c = 0; c < cols; ++c) out[r * cols + c] = in[c * rows + r];
}

}  // namespace vrlab
