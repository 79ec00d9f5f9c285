#pragma once

#include <string_view>

#include "vrlab/rng.hpp"

namespace vrlab {

// Named, mutually independent generator derived from the root seed. The name
// set is fixed: env, init, action_noise, augment, sample, intervention.
Rng rng_stream(uint64_t root_seed, std::string_view name);

}  // namespace vrlab
