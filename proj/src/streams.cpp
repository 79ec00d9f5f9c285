#include "vrlab/harness/streams.hpp"

#include <array>
#include <string>

#include "vrlab/errors.hpp"

namespace vrlab {

Rng rng_stream(uint64_t root_seed, std::string_view name) {
  static constexpr std::array<std::string_view, 6> kNames = {
      "env", "init", "action_noise", "augment", "sample", "intervention"};
  bool known = false;
  for (auto n : kNames) known = known || n == name;
  if (!known) throw ConfigError("rng_stream: unknown stream name '" + std::string(name) + "'");
  return Rng(mix64(root_seed ^ fnv1a64(name)));
}

}  // namespace vrlab
