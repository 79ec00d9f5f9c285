#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "vrlab/errors.hpp"

namespace vrlab {

inline int64_t shape_numel(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

// Dense row-major n-d array with an optional gradient buffer of equal length.
// The gradient buffer is allocated lazily when the tensor enters a taped graph.
template <typename T>
struct Tensor {
  std::vector<int64_t> shape;
  std::vector<T> data;
  std::vector<T> grad;
  bool requires_grad = false;

  Tensor() = default;
  explicit Tensor(std::vector<int64_t> s, T fill = T(0))
      : shape(std::move(s)), data(static_cast<size_t>(shape_numel(shape)), fill) {}

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int64_t dim(size_t i) const { return shape.at(i); }
  size_t ndim() const { return shape.size(); }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
  }
  void zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), T(0));
  }
  bool has_grad() const { return grad.size() == data.size(); }

  bool all_finite() const {
    for (T v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }
};

template <typename T>
using TensorPtr = std::shared_ptr<Tensor<T>>;

template <typename T>
TensorPtr<T> make_tensor(std::vector<int64_t> shape, T fill = T(0)) {
  return std::make_shared<Tensor<T>>(std::move(shape), fill);
}

template <typename T>
TensorPtr<T> make_tensor(std::vector<int64_t> shape, std::vector<T> values) {
  auto t = std::make_shared<Tensor<T>>();
  t->shape = std::move(shape);
  if (shape_numel(t->shape) != static_cast<int64_t>(values.size()))
    throw ConfigError("tensor: value count does not match shape");
  t->data = std::move(values);
  return t;
}

inline std::string shape_str(const std::vector<int64_t>& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

}  // namespace vrlab
