#pragma once

#include <cstdint>
#include <vector>

#include "vrlab/numerics/tensor.hpp"
#include "vrlab/rng.hpp"

namespace vrlab {

struct ShiftToggle {
  int64_t step = 0;
  bool on = true;
};

struct ShiftAugmentConfig {
  int pad = 2;
  bool enabled = true;
  std::vector<ShiftToggle> schedule;  // toggle steps, strictly increasing
};

// Last toggle at or before `step`; `enabled` before any toggle applies.
bool da_active(const ShiftAugmentConfig& cfg, int64_t step);

// Replicate-pad by `pad` then crop at offset (dy, dx) in [0, 2*pad]^2.
// (pad, pad) is the identity. All channels of one image shift together.
void shift_one(const float* in, float* out, int64_t channels, int64_t height, int64_t width,
               int pad, int dy, int dx);

// Independent integer offsets per image, uniform over [0, 2*pad]^2
// (dy drawn first, then dx).
TensorPtr<float> random_shift(const TensorPtr<float>& batch, int pad, Rng& rng);

}  // namespace vrlab
