#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace phevdemand::text {

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

/// Strict full-field parse; nullopt on trailing garbage or empty input.
std::optional<double> parse_double(std::string_view field);

std::vector<std::string_view> split(std::string_view line, char sep);

std::string_view trim(std::string_view s);

}  // namespace phevdemand::text
