#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ptme {

/// Shortest representation that round-trips; "." decimal point, no grouping.
std::string format_double(double value);

/// Splits on a single-character delimiter, keeping empty fields.
std::vector<std::string> split(std::string_view text, char delim);

std::string_view trim(std::string_view text);

/// Locale-independent strict parse; throws ConfigError on trailing garbage.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

}  // namespace ptme
