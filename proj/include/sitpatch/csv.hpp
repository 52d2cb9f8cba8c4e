#pragma once

#include <cstdio>
#include <string>

namespace sit::csv {

// Fixed float formatting for reproducible outputs: shortest form at up to
// 12 significant digits.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace sit::csv
