#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace geocorr {

/// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

/// Parses the whole of `text` as a double; throws ParseError naming `what` otherwise.
double parse_double(std::string_view text, std::string_view what);

/// Comma-separated list of doubles.
std::vector<double> parse_double_list(std::string_view text, std::string_view what);

std::string_view trim(std::string_view text);

}  // namespace geocorr
