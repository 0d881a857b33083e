#pragma once

#include <cstdio>
#include <fstream>
#include <string>

#include "corrq/error.hpp"

namespace corrq {

/// Shortest-exact-enough decimal rendering: 17 significant digits.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    return out;
}

}  // namespace corrq
