#pragma once

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>

namespace trussfa {

/// Shortest decimal that parses back to exactly the same double.
/// Non-finite values print as "nan", "inf", "-inf".
inline std::string format_double(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline void write_double(std::ostream& os, double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    os.write(buf, res.ptr - buf);
}

} // namespace trussfa
