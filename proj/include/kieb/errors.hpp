#pragma once

#include <stdexcept>
#include <string>

namespace kieb {

// Error taxonomy shared by the library and the CLI. The CLI maps these to
// process exit codes (usage -> 1, io -> 2, numeric -> 3).
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParamError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace kieb
