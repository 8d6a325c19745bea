#pragma once

#include "sheepweight/errors.hpp"

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <system_error>

namespace sheepweight {

/// Shortest decimal text that parses back to the identical double.
inline std::string format_double(double value) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, result.ptr);
}

/// Strict parse: the whole field must be a finite decimal number.
inline double parse_double(std::string_view text, std::string_view what) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto result = std::from_chars(first, last, value);
    if (text.empty() || result.ec != std::errc{} || result.ptr != last || !std::isfinite(value)) {
        throw ValidationError(std::string(what) + ": '" + std::string(text) + "' is not a number");
    }
    return value;
}

}  // namespace sheepweight
