#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "vrlab/numerics/tensor.hpp"
#include "vrlab/rng.hpp"

namespace vrlab {

// One environment interaction. `discount_flag` is 1 when bootstrapping past
// this transition is allowed and 0 at a true environment termination; the
// fixed-horizon toy tasks always emit 1 and mark the horizon with episode_end.
struct Transition {
  TensorPtr<float> obs;       // [stack, H, W]
  std::vector<float> action;
  float reward = 0.0f;
  float discount_flag = 1.0f;
  bool episode_end = false;
  TensorPtr<float> next_obs;  // [stack, H, W]
};

struct Batch {
  TensorPtr<float> obs;            // [B, stack, H, W]
  TensorPtr<float> action;         // [B, A]
  TensorPtr<float> n_step_reward;  // [B]
  TensorPtr<float> discount_n;     // [B]
  TensorPtr<float> next_obs_n;     // [B, stack, H, W]  (observation n steps ahead)
};

// Ring-buffer replay with n-step window assembly. Frames are deduplicated:
// each push stores only the newest frame as uint8 (pixel values live on the
// 1/255 grid, so the round trip is lossless) and stacks are rebuilt at sample
// time with repeat-padding at episode starts, mirroring the environment's
// reset behavior. Windows never cross an episode boundary.
class ReplayBuffer {
 public:
  ReplayBuffer(int64_t capacity, int frame_size, int frame_stack, int action_dim);

  void push(const Transition& t);

  // Uniform over valid window starts. Returns nullopt while the buffer holds
  // fewer than `min_transitions` (the retryable not-ready signal).
  std::optional<Batch> sample_nstep(int batch_size, int n, float gamma, Rng& rng,
                                    int64_t min_transitions) const;

  int64_t size() const { return static_cast<int64_t>(records_.size()); }
  int64_t capacity() const { return capacity_; }
  int64_t episodes_stored() const { return static_cast<int64_t>(episodes_.size()); }

  // -- test / oracle API ------------------------------------------------
  struct Window {
    std::vector<float> obs;
    std::vector<float> next_obs;
    std::vector<float> action;
    float n_step_reward = 0.0f;
    float discount_n = 0.0f;
  };
  // Serial ids are assigned monotonically from 0 at the first push; the
  // currently stored range is [front_serial, front_serial + size).
  int64_t front_serial() const { return front_serial_; }
  bool try_window(int64_t serial, int n, float gamma, Window& out) const;
  std::vector<int64_t> valid_starts(int n) const;
  const std::vector<float>& action_at(int64_t serial) const;

  // Flat binary episode dump for oracle tests. Layout: "VRLREP1\n", then
  // int32 frame_size, frame_stack, action_dim, episode count; per episode:
  // int32 length, uint8 finished, first frame (H*W bytes), then per record:
  // float action[A], float reward, uint8 terminal, frame (H*W bytes).
  void dump_episodes(const std::string& path) const;

 private:
  struct Record {
    std::vector<uint8_t> frame_after;
    std::vector<float> action;
    float reward = 0.0f;
    bool terminal = false;
    int32_t local = 0;
    int64_t ep_serial = 0;
  };
  struct Episode {
    std::vector<uint8_t> first_frame;
    int64_t serial = 0;
    int64_t first_record_serial = 0;
    int32_t len = 0;  // records collected so far
    bool finished = false;
  };

  const Episode& episode_of(const Record& r) const;
  // Fills `dst` with frame j of the given episode; false if evicted.
  bool fetch_frame(const Episode& ep, int32_t j, float* dst) const;
  bool build_stack(const Episode& ep, int32_t i, std::vector<float>& out) const;
  void to_u8(const TensorPtr<float>& stacked, std::vector<uint8_t>& out) const;

  int64_t capacity_;
  int frame_size_;
  int frame_stack_;
  int action_dim_;
  int64_t frame_px_;

  std::deque<Record> records_;
  std::deque<Episode> episodes_;
  int64_t front_serial_ = 0;
  int64_t next_serial_ = 0;
  int64_t next_ep_serial_ = 0;
  bool episode_open_ = false;
};

}  // namespace vrlab
