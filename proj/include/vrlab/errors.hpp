#pragma once

#include <stdexcept>
#include <string>

namespace vrlab {

// Bad shapes, unknown names, invalid config values.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition.
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// Training run hit a non-recoverable state (non-finite loss, unwritable output).
struct RunAborted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace vrlab
