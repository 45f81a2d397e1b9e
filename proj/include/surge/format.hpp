#pragma once

#include <cstdio>
#include <string>

namespace surge {

/// Fixed 9-significant-digit rendering used by every CSV writer.
inline std::string format_number(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.9g", value);
  return buffer;
}

}  // namespace surge
