#pragma once

#include <string>
#include <string_view>

namespace ftle {

/// Shortest-round-trip-safe text for a double: 17 significant digits, `%.17g` style.
std::string format_double(double value);

/// Parses a double, requiring the whole string to be consumed. Throws ConfigError naming `what`.
double parse_double(std::string_view text, std::string_view what);

}  // namespace ftle
