#pragma once

#include <cmath>
#include <vector>

#include "vrlab/errors.hpp"
#include "vrlab/numerics/tensor.hpp"
#include "vrlab/rng.hpp"

namespace vrlab {

enum class InitScheme { orthogonal, uniform_fanin };

namespace detail {

// Householder QR of a [n,m] column matrix, n >= m. Returns Q's first m columns
// in `q` (column-major n x m). Plain O(n m^2), fine for layer-sized matrices.
inline void qr_q(std::vector<double>& a, int64_t n, int64_t m, std::vector<double>& q) {
  std::vector<double> vs;  // packed Householder vectors
  vs.reserve(static_cast<size_t>(n) * m);
  std::vector<int64_t> vlen(m);
  std::vector<double> rdiag(m);
  for (int64_t k = 0; k < m; ++k) {
    double norm = 0;
    for (int64_t i = k; i < n; ++i) norm += a[i * m + k] * a[i * m + k];
    norm = std::sqrt(norm);
    double alpha = a[k * m + k] >= 0 ? -norm : norm;
    rdiag[k] = alpha;
    std::vector<double> v(n - k);
    v[0] = a[k * m + k] - alpha;
    for (int64_t i = k + 1; i < n; ++i) v[i - k] = a[i * m + k];
    double vnorm2 = 0;
    for (double x : v) vnorm2 += x * x;
    if (vnorm2 > 0) {
      for (int64_t j = k; j < m; ++j) {
        double dot = 0;
        for (int64_t i = k; i < n; ++i) dot += v[i - k] * a[i * m + j];
        const double s = 2.0 * dot / vnorm2;
        for (int64_t i = k; i < n; ++i) a[i * m + j] -= s * v[i - k];
      }
    }
    vlen[k] = n - k;
    vs.insert(vs.end(), v.begin(), v.end());
    if (vnorm2 == 0) vs.back() = 0;  // degenerate column; keep identity reflector
  }
  // Accumulate Q = H_0 ... H_{m-1} applied to the first m identity columns.
  q.assign(static_cast<size_t>(n) * m, 0.0);
  for (int64_t j = 0; j < m; ++j) q[j * m + j] = 1.0;
  for (int64_t k = m - 1; k >= 0; --k) {
    const double* v = vs.data();
    for (int64_t t = 0; t < k; ++t) v += vlen[t];
    double vnorm2 = 0;
    for (int64_t i = 0; i < vlen[k]; ++i) vnorm2 += v[i] * v[i];
    if (vnorm2 == 0) continue;
    for (int64_t j = 0; j < m; ++j) {
      double dot = 0;
      for (int64_t i = k; i < n; ++i) dot += v[i - k] * q[i * m + j];
      const double s = 2.0 * dot / vnorm2;
      for (int64_t i = k; i < n; ++i) q[i * m + j] -= s * v[i - k];
    }
  }
  // Sign-fix by diag(R) so the distribution is symmetric.
  for (int64_t j = 0; j < m; ++j) {
    if (rdiag[j] < 0) continue;
    for (int64_t i = 0; i < n; ++i) q[i * m + j] = -q[i * m + j];
  }
}

}  // namespace detail

// Weight initializer. Shapes are interpreted as [rows, fan_in...] with
// fan_in = numel/rows. Orthogonal draws run in double regardless of T so the
// float and double instantiations agree bit-for-bit after the final cast.
template <typename T>
Tensor<T> init_layer(const std::vector<int64_t>& shape, InitScheme scheme, Rng& rng) {
  if (shape.empty() || shape_numel(shape) <= 0) throw ConfigError("init_layer: bad shape");
  const int64_t rows = shape[0];
  const int64_t cols = shape_numel(shape) / rows;
  Tensor<T> out(shape);

  if (scheme == InitScheme::uniform_fanin) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    for (auto& v : out.data) v = static_cast<T>(rng.uniform(-bound, bound));
    return out;
  }

  // Orthogonal: QR of a Gaussian [n,m] with n = max(rows,cols), m = min.
  const bool wide = cols > rows;
  const int64_t n = wide ? cols : rows;
  const int64_t m = wide ? rows : cols;
  std::vector<double> g(static_cast<size_t>(n) * m);
  for (auto& v : g) v = rng.normal();
  std::vector<double> q;
  detail::qr_q(g, n, m, q);
  // q is n x m with orthonormal columns; rows of the result are orthonormal
  // when the matrix is wide, columns when it is tall.
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t c = 0; c < cols; ++c) {
      const double v = wide ? q[c * m + r] : q[r * m + c];
      out.data[r * cols + c] = static_cast<T>(v);
    }
  return out;
}

}  // namespace vrlab
