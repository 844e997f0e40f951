#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mdm {

/// Shortest-safe decimal for a double: 17 significant digits, round-trips exactly.
std::string format_real(double value);

/// Strict parse: the whole token must be a finite decimal number.
std::optional<double> parse_real(std::string_view text);

std::vector<std::string> split(std::string_view line, char sep);
std::string_view trim(std::string_view text);

}  // namespace mdm
