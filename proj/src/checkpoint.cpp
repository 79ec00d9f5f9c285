#include "vrlab/agent/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "vrlab/errors.hpp"

namespace vrlab {

namespace {

constexpr char kMagic[8] = {'V', 'R', 'L', 'A', 'B', 'C', 'K', '1'};

template <typename T>
void write_pod(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

}  // namespace

void save_checkpoint(Agent& agent, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw RunAborted("checkpoint: cannot open " + path);
  f.write(kMagic, 8);
  write_pod<uint32_t>(f, 1);
  write_pod<int64_t>(f, agent.env_step);
  auto params = agent.all_params();
  write_pod<uint32_t>(f, static_cast<uint32_t>(params.size()));
  for (const auto* p : params) {
    write_pod<uint32_t>(f, static_cast<uint32_t>(p->name.size()));
    f.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    write_pod<uint32_t>(f, static_cast<uint32_t>(p->value->shape.size()));
    for (int64_t d : p->value->shape) write_pod<int64_t>(f, d);
    const auto n = static_cast<std::streamsize>(p->value->data.size() * sizeof(float));
    f.write(reinterpret_cast<const char*>(p->value->data.data()), n);
    f.write(reinterpret_cast<const char*>(p->adam.m.data()), n);
    f.write(reinterpret_cast<const char*>(p->adam.v.data()), n);
    write_pod<int64_t>(f, p->adam.t);
    write_pod<uint8_t>(f, p->trainable ? 1 : 0);
  }
  if (!f) throw RunAborted("checkpoint: write failed for " + path);
}

CheckpointData read_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("checkpoint: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) throw ConfigError("checkpoint: bad magic in " + path);
  CheckpointData data;
  data.version = read_pod<uint32_t>(f);
  if (data.version != 1) throw ConfigError("checkpoint: unsupported version");
  data.env_step = read_pod<int64_t>(f);
  const uint32_t count = read_pod<uint32_t>(f);
  data.entries.resize(count);
  for (auto& e : data.entries) {
    const uint32_t len = read_pod<uint32_t>(f);
    e.name.resize(len);
    f.read(e.name.data(), len);
    const uint32_t ndim = read_pod<uint32_t>(f);
    e.shape.resize(ndim);
    for (auto& d : e.shape) d = read_pod<int64_t>(f);
    const int64_t n = shape_numel(e.shape);
    e.value.resize(static_cast<size_t>(n));
    e.m.resize(static_cast<size_t>(n));
    e.v.resize(static_cast<size_t>(n));
    f.read(reinterpret_cast<char*>(e.value.data()), n * static_cast<int64_t>(sizeof(float)));
    f.read(reinterpret_cast<char*>(e.m.data()), n * static_cast<int64_t>(sizeof(float)));
    f.read(reinterpret_cast<char*>(e.v.data()), n * static_cast<int64_t>(sizeof(float)));
    e.adam_t = read_pod<int64_t>(f);
    e.trainable = read_pod<uint8_t>(f) != 0;
    if (!f) throw ConfigError("checkpoint: truncated file " + path);
  }
  return data;
}

void load_checkpoint(Agent& agent, const CheckpointData& data) {
  agent.env_step = data.env_step;
  for (const auto& e : data.entries) {
    Parameter<float>* p = agent.find_param(e.name);
    if (!p) throw ConfigError("checkpoint: agent has no parameter named " + e.name);
    if (p->value->shape != e.shape)
      throw ConfigError("checkpoint: shape mismatch for " + e.name);
    p->value->data = e.value;
    p->adam.m = e.m;
    p->adam.v = e.v;
    p->adam.t = e.adam_t;
  }
}

}  // namespace vrlab
