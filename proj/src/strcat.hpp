#pragma once

#include <sstream>
#include <string>

namespace shufflenet::detail {

template <typename... Args>
std::string cat(const Args&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

}  // namespace shufflenet::detail
