#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "vrlab/errors.hpp"
#include "vrlab/numerics/tensor.hpp"

namespace vrlab {

template <typename T>
struct AdamState {
  std::vector<T> m;
  std::vector<T> v;
  int64_t t = 0;
  T lr = T(1e-4);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps = T(1e-8);

  void reset(size_t n) {
    m.assign(n, T(0));
    v.assign(n, T(0));
    t = 0;
  }
};

// A named weight with its frozen initialization snapshot and optimizer state.
// `initial` is captured exactly once at construction and never rewritten, even
// across head resets; the distance-from-init regularizer depends on that.
template <typename T>
struct Parameter {
  std::string name;
  TensorPtr<T> value;
  Tensor<T> initial;
  AdamState<T> adam;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Tensor<T> init_value, T lr) : name(std::move(n)) {
    init_value.grad.clear();
    init_value.requires_grad = false;
    value = std::make_shared<Tensor<T>>(init_value);
    initial = std::move(init_value);
    value->requires_grad = true;
    adam.lr = lr;
    adam.reset(value->data.size());
  }

  // Replaces the live weights without touching the initial snapshot.
  void assign(const Tensor<T>& fresh) {
    if (fresh.numel() != value->numel()) throw ContractViolation("parameter assign: size mismatch");
    value->data = fresh.data;
  }
};

// One Adam step with bias correction and decoupled weight decay
// (value -= lr * wd * value alongside the moment update). Clears the gradient
// afterwards.
template <typename T>
void adam_step(Parameter<T>& p, T weight_decay = T(0)) {
  if (!p.value->has_grad()) throw ContractViolation("adam_step: parameter has no gradient: " + p.name);
  auto& s = p.adam;
  s.t += 1;
  const T bc1 = T(1) - std::pow(s.beta1, static_cast<T>(s.t));
  const T bc2 = T(1) - std::pow(s.beta2, static_cast<T>(s.t));
  T* w = p.value->data.data();
  T* g = p.value->grad.data();
  const int64_t n = p.value->numel();
  for (int64_t i = 0; i < n; ++i) {
    s.m[i] = s.beta1 * s.m[i] + (T(1) - s.beta1) * g[i];
    s.v[i] = s.beta2 * s.v[i] + (T(1) - s.beta2) * g[i] * g[i];
    const T mhat = s.m[i] / bc1;
    const T vhat = s.v[i] / bc2;
    w[i] -= s.lr * (mhat / (std::sqrt(vhat) + s.eps) + weight_decay * w[i]);
  }
  p.value->zero_grad();
}

// target <- tau * online + (1 - tau) * target, elementwise.
template <typename T>
void polyak_update(Parameter<T>& target, const Parameter<T>& online, T tau) {
  if (target.value->numel() != online.value->numel())
    throw ConfigError("polyak_update: shape mismatch for " + target.name);
  if (!(tau > T(0) && tau <= T(1))) throw ContractViolation("polyak_update: tau out of range");
  T* t = target.value->data.data();
  const T* o = online.value->data.data();
  for (int64_t i = 0; i < target.value->numel(); ++i) t[i] = tau * o[i] + (T(1) - tau) * t[i];
}

}  // namespace vrlab
