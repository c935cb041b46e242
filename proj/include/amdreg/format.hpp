#pragma once

#include <cstdio>
#include <string>

namespace amdreg {

// Shortest round-trip decimal form; non-finite values print as inf/-inf/nan.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace amdreg
