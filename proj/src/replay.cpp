#include "vrlab/replay/replay.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "vrlab/errors.hpp"

namespace vrlab {

ReplayBuffer::ReplayBuffer(int64_t capacity, int frame_size, int frame_stack, int action_dim)
    : capacity_(capacity), frame_size_(frame_size), frame_stack_(frame_stack),
      action_dim_(action_dim), frame_px_(static_cast<int64_t>(frame_size) * frame_size) {
  if (capacity < 1) throw ConfigError("replay: capacity must be positive");
}

void ReplayBuffer::to_u8(const TensorPtr<float>& stacked, std::vector<uint8_t>& out) const {
  if (!stacked || stacked->numel() != frame_stack_ * frame_px_)
    throw ConfigError("replay push: observation shape mismatch");
  // newest frame is the last channel of the stack
  const float* src = stacked->data.data() + static_cast<int64_t>(frame_stack_ - 1) * frame_px_;
  out.resize(static_cast<size_t>(frame_px_));
  for (int64_t i = 0; i < frame_px_; ++i)
    out[i] = static_cast<uint8_t>(std::lround(src[i] * 255.0f));
}

void ReplayBuffer::push(const Transition& t) {
  if (static_cast<int>(t.action.size()) != action_dim_)
    throw ConfigError("replay push: action dim mismatch");

  if (!episode_open_) {
    Episode ep;
    to_u8(t.obs, ep.first_frame);
    ep.serial = next_ep_serial_++;
    ep.first_record_serial = next_serial_;
    episodes_.push_back(std::move(ep));
    episode_open_ = true;
  }

  Episode& ep = episodes_.back();
  Record r;
  to_u8(t.next_obs, r.frame_after);
  r.action = t.action;
  r.reward = t.reward;
  r.terminal = t.discount_flag == 0.0f;
  r.local = ep.len;
  r.ep_serial = ep.serial;
  records_.push_back(std::move(r));
  next_serial_ += 1;
  ep.len += 1;
  if (t.episode_end) {
    ep.finished = true;
    episode_open_ = false;
  }

  while (static_cast<int64_t>(records_.size()) > capacity_) {
    records_.pop_front();
    front_serial_ += 1;
    Episode& front = episodes_.front();
    const int64_t evicted = front_serial_ - front.first_record_serial;
    if (evicted >= front.len && front.finished) episodes_.pop_front();
  }
}

const ReplayBuffer::Episode& ReplayBuffer::episode_of(const Record& r) const {
  const int64_t idx = r.ep_serial - episodes_.front().serial;
  return episodes_[static_cast<size_t>(idx)];
}

bool ReplayBuffer::fetch_frame(const Episode& ep, int32_t j, float* dst) const {
  const uint8_t* src = nullptr;
  if (j == 0) {
    src = ep.first_frame.data();
  } else {
    const int64_t serial = ep.first_record_serial + j - 1;
    if (serial < front_serial_) return false;
    src = records_[static_cast<size_t>(serial - front_serial_)].frame_after.data();
  }
  for (int64_t i = 0; i < frame_px_; ++i) dst[i] = static_cast<float>(src[i]) / 255.0f;
  return true;
}

bool ReplayBuffer::build_stack(const Episode& ep, int32_t i, std::vector<float>& out) const {
  out.resize(static_cast<size_t>(frame_stack_) * frame_px_);
  for (int s = 0; s < frame_stack_; ++s) {
    const int32_t j = std::max(0, i - (frame_stack_ - 1 - s));
    if (!fetch_frame(ep, j, out.data() + static_cast<int64_t>(s) * frame_px_)) return false;
  }
  return true;
}

bool ReplayBuffer::try_window(int64_t serial, int n, float gamma, Window& out) const {
  if (serial < front_serial_ || serial >= next_serial_) return false;
  const Record& start = records_[static_cast<size_t>(serial - front_serial_)];
  const Episode& ep = episode_of(start);
  const int32_t i = start.local;

  // Truncated windows are only defined once the episode length is final.
  int m;
  if (ep.finished) {
    m = std::min<int>(n, ep.len - i);
  } else {
    if (i + n > ep.len) return false;
    m = n;
  }

  // A mid-window terminal also truncates: bootstrap stops where the episode did.
  float reward = 0.0f, disc = 1.0f;
  int used = 0;
  bool terminal = false;
  for (int j = 0; j < m; ++j) {
    const Record& r = records_[static_cast<size_t>(serial + j - front_serial_)];
    reward += disc * r.reward;
    disc *= gamma;
    used = j + 1;
    if (r.terminal) {
      terminal = true;
      break;
    }
  }

  if (!build_stack(ep, i, out.obs)) return false;
  if (!build_stack(ep, i + used, out.next_obs)) return false;
  out.action = start.action;
  out.n_step_reward = reward;
  out.discount_n = terminal ? 0.0f : disc;
  return true;
}

std::vector<int64_t> ReplayBuffer::valid_starts(int n) const {
  std::vector<int64_t> out;
  Window w;
  for (int64_t s = front_serial_; s < next_serial_; ++s)
    if (try_window(s, n, 0.99f, w)) out.push_back(s);
  return out;
}

const std::vector<float>& ReplayBuffer::action_at(int64_t serial) const {
  if (serial < front_serial_ || serial >= next_serial_)
    throw ContractViolation("replay: serial out of range");
  return records_[static_cast<size_t>(serial - front_serial_)].action;
}

std::optional<Batch> ReplayBuffer::sample_nstep(int batch_size, int n, float gamma, Rng& rng,
                                                int64_t min_transitions) const {
  if (size() < std::max<int64_t>(min_transitions, 1)) return std::nullopt;

  Batch b;
  b.obs = make_tensor<float>({batch_size, frame_stack_, frame_size_, frame_size_});
  b.next_obs_n = make_tensor<float>({batch_size, frame_stack_, frame_size_, frame_size_});
  b.action = make_tensor<float>({batch_size, action_dim_});
  b.n_step_reward = make_tensor<float>({batch_size});
  b.discount_n = make_tensor<float>({batch_size});

  Window w;
  const int64_t span = size();
  for (int k = 0; k < batch_size; ++k) {
    bool ok = false;
    for (int attempt = 0; attempt < 10000; ++attempt) {
      const int64_t serial = front_serial_ + rng.randint(span);
      if (try_window(serial, n, gamma, w)) {
        ok = true;
        break;
      }
    }
    if (!ok) return std::nullopt;  // effectively no valid windows yet
    std::copy(w.obs.begin(), w.obs.end(), b.obs->data.begin() + static_cast<int64_t>(k) * w.obs.size());
    std::copy(w.next_obs.begin(), w.next_obs.end(),
              b.next_obs_n->data.begin() + static_cast<int64_t>(k) * w.next_obs.size());
    std::copy(w.action.begin(), w.action.end(), b.action->data.begin() + static_cast<int64_t>(k) * action_dim_);
    b.n_step_reward->data[k] = w.n_step_reward;
    b.discount_n->data[k] = w.discount_n;
  }
  return b;
}

void ReplayBuffer::dump_episodes(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw RunAborted("replay dump: cannot open " + path);
  f.write("VRLREP1\n", 8);
  auto w32 = [&](int32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
  w32(frame_size_);
  w32(frame_stack_);
  w32(action_dim_);
  w32(static_cast<int32_t>(episodes_.size()));
  for (const auto& ep : episodes_) {
    const int64_t evicted = std::max<int64_t>(0, front_serial_ - ep.first_record_serial);
    const int32_t remaining = static_cast<int32_t>(ep.len - evicted);
    w32(remaining);
    const uint8_t fin = ep.finished ? 1 : 0;
    f.write(reinterpret_cast<const char*>(&fin), 1);
    f.write(reinterpret_cast<const char*>(ep.first_frame.data()),
            static_cast<std::streamsize>(ep.first_frame.size()));
    for (int64_t s = ep.first_record_serial + evicted; s < ep.first_record_serial + ep.len; ++s) {
      const Record& r = records_[static_cast<size_t>(s - front_serial_)];
      f.write(reinterpret_cast<const char*>(r.action.data()),
              static_cast<std::streamsize>(r.action.size() * sizeof(float)));
      f.write(reinterpret_cast<const char*>(&r.reward), sizeof(float));
      const uint8_t term = r.terminal ? 1 : 0;
      f.write(reinterpret_cast<const char*>(&term), 1);
      f.write(reinterpret_cast<const char*>(r.frame_after.data()),
              static_cast<std::streamsize>(r.frame_after.size()));
    }
  }
}

}  // namespace vrlab
