#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vrlab/agent/agent.hpp"

namespace vrlab {

// Keyed binary archive of named parameter arrays, their optimizer states and
// the step counter. Layout: "VRLABCK1" magic, u32 version, i64 env_step,
// u32 entry count; each entry stores name, shape, value/m/v arrays (f32),
// the Adam step count and the trainable flag.
struct CheckpointData {
  uint32_t version = 1;
  int64_t env_step = 0;
  struct Entry {
    std::string name;
    std::vector<int64_t> shape;
    std::vector<float> value, m, v;
    int64_t adam_t = 0;
    bool trainable = true;
  };
  std::vector<Entry> entries;
};

void save_checkpoint(Agent& agent, const std::string& path);
CheckpointData read_checkpoint(const std::string& path);
void load_checkpoint(Agent& agent, const CheckpointData& data);

}  // namespace vrlab
