#pragma once

#include <charconv>
#include <string>

namespace adaptids {

/// Shortest round-trip decimal form; identical output on every platform.
inline std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

} // namespace adaptids
