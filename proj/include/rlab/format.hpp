#pragma once

#include <cstdio>
#include <ostream>
#include <string>

namespace rlab {

/// Round-trippable decimal form used in every CSV and report.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Num {
  double v;
  friend std::ostream& operator<<(std::ostream& os, Num n) { return os << fmt(n.v); }
};

}  // namespace rlab
