#pragma once

#include <cstdio>
#include <string>

namespace cogflow {

// Shortest round-trippable decimal form; identical input bits give identical
// text, which the byte-identical artifact contract relies on.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

inline std::string format_axis_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
}

}  // namespace cogflow
