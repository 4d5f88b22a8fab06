#pragma once

#include <stdexcept>
#include <string>

namespace shufflenet {

/// Raised when tensor shapes, channel counts or group counts are inconsistent.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by graph construction and execution. Messages carry the node name.
class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration files or architecture names.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace shufflenet
