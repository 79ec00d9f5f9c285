#include "vrlab/augment/augment.hpp"

#include <algorithm>

#include "vrlab/errors.hpp"

namespace vrlab {

bool da_active(const ShiftAugmentConfig& cfg, int64_t step) {
  bool on = cfg.enabled;
  for (const auto& t : cfg.schedule) {
    if (t.step > step) break;
    on = t.on;
  }
  return on;
}

void shift_one(const float* in, float* out, int64_t channels, int64_t height, int64_t width,
               int pad, int dy, int dx) {
  // out[y, x] = in[clamp(y + dy - pad), clamp(x + dx - pad)] — the clamp is the
  // replicate padding, applied without materializing the padded image.
  const int oy = dy - pad;
  const int ox = dx - pad;
  for (int64_t c = 0; c < channels; ++c) {
    const float* src = in + c * height * width;
    float* dst = out + c * height * width;
    for (int64_t y = 0; y < height; ++y) {
      const int64_t sy = std::clamp<int64_t>(y + oy, 0, height - 1);
      const float* row = src + sy * width;
      for (int64_t x = 0; x < width; ++x) {
        const int64_t sx = std::clamp<int64_t>(x + ox, 0, width - 1);
        dst[y * width + x] = row[sx];
      }
    }
  }
}

TensorPtr<float> random_shift(const TensorPtr<float>& batch, int pad, Rng& rng) {
  if (batch->ndim() != 4) throw ConfigError("random_shift: expects [B,C,H,W]");
  const int64_t B = batch->dim(0), C = batch->dim(1), H = batch->dim(2), W = batch->dim(3);
  if (pad < 0 || 2 * pad > std::min(H, W)) throw ConfigError("random_shift: pad out of range");
  auto out = make_tensor<float>(batch->shape);
  const int64_t img = C * H * W;
  for (int64_t i = 0; i < B; ++i) {
    const int dy = static_cast<int>(rng.randint(2 * pad + 1));
    const int dx = static_cast<int>(rng.randint(2 * pad + 1));
    shift_one(batch->data.data() + i * img, out->data.data() + i * img, C, H, W, pad, dy, dx);
  }
  return out;
}

}  // namespace vrlab
