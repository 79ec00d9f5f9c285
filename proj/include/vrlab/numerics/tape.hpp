#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "vrlab/errors.hpp"
#include "vrlab/numerics/tensor.hpp"

namespace vrlab {

// Reverse-mode tape. Ops append a closure that propagates the output gradient
// into the input gradients; backward() replays them in reverse order.
// A null Tape* passed to an op means inference mode: no closures, no grads.
template <typename T>
class Tape {
 public:
  void push(std::function<void()> step) { steps_.push_back(std::move(step)); }

  // Seeds d(loss)/d(loss) = 1 and runs the recorded graph backwards.
  void backward(const TensorPtr<T>& loss) {
    if (loss->numel() != 1) throw ContractViolation("backward: loss must be scalar");
    loss->ensure_grad();
    loss->grad[0] = T(1);
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
    steps_.clear();
  }

  void clear() { steps_.clear(); }
  size_t size() const { return steps_.size(); }

 private:
  std::vector<std::function<void()>> steps_;
};

}  // namespace vrlab
