#pragma once

#include <cstdio>
#include <string>

namespace modify {

// Shortest round-trip-exact decimal form. All emitted CSVs use this so that
// identical runs produce byte-identical files.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace modify
