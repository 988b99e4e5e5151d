#include "lisa/util.hpp"

#include <cstdio>

namespace lisa::util {

std::string format_fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  return buf;
}

}  // namespace lisa::util
