#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "vrlab/errors.hpp"
#include "vrlab/numerics/tensor.hpp"

namespace vrlab {

// One round of power iteration for the largest singular value of w[O,I].
// Reads and rewrites the persisted left vector u[O]; also emits v[I].
// sigma is clamped at 1e-12 so a zero matrix passes through unscaled.
template <typename T>
T power_iteration_step(const Tensor<T>& w, std::vector<T>& u, std::vector<T>& v) {
  const int64_t O = w.dim(0), I = w.dim(1);
  if (static_cast<int64_t>(u.size()) != O) throw ContractViolation("power iteration: bad u length");
  v.assign(static_cast<size_t>(I), T(0));
  for (int64_t o = 0; o < O; ++o) {
    const T s = u[o];
    for (int64_t i = 0; i < I; ++i) v[i] += s * w.data[o * I + i];
  }
  T vn = T(0);
  for (T x : v) vn += x * x;
  vn = std::sqrt(vn);
  if (vn > T(0))
    for (T& x : v) x /= vn;
  std::vector<T> un(static_cast<size_t>(O), T(0));
  for (int64_t o = 0; o < O; ++o) {
    T dot = T(0);
    for (int64_t i = 0; i < I; ++i) dot += w.data[o * I + i] * v[i];
    un[o] = dot;
  }
  T sigma = T(0);
  for (T x : un) sigma += x * x;
  sigma = std::sqrt(sigma);
  if (sigma > T(0))
    for (T& x : un) x /= sigma;
  u = std::move(un);
  return std::max(sigma, T(1e-12));
}

// w / sigma_hat after n_iters rounds of power iteration from the persisted u.
// Returns the normalized matrix and the updated u.
template <typename T>
std::pair<Tensor<T>, std::vector<T>> spectral_normalize(const Tensor<T>& w, std::vector<T> u,
                                                        int n_iters) {
  if (n_iters < 1) throw ContractViolation("spectral_normalize: n_iters must be >= 1");
  std::vector<T> v;
  T sigma = T(1);
  for (int i = 0; i < n_iters; ++i) sigma = power_iteration_step(w, u, v);
  Tensor<T> out(w.shape);
  for (int64_t i = 0; i < w.numel(); ++i) out.data[i] = w.data[i] / sigma;
  return {std::move(out), std::move(u)};
}

}  // namespace vrlab
