#pragma once

#include <stdexcept>
#include <string>

namespace rflaf {

// Domain-specific failures. Argument validation uses std::invalid_argument.

struct IllPosedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegeneratePoolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PipelineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace rflaf
