#pragma once

#include <cstdint>

namespace vrlab {

// Counts positive entries among post-rectifier activations. Ops only feed it
// for relu/crelu outputs; tanh/identity layers never contribute units.
struct FauProbe {
  int64_t positive = 0;
  int64_t total = 0;

  template <typename T>
  void observe(const T* p, int64_t n) {
    int64_t pos = 0;
    for (int64_t i = 0; i < n; ++i) pos += (p[i] > T(0)) ? 1 : 0;
    positive += pos;
    total += n;
  }

  double fraction() const { return total == 0 ? 0.0 : static_cast<double>(positive) / static_cast<double>(total); }
};

}  // namespace vrlab
