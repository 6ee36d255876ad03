#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace flowsentry {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

/// Splits one CSV line on commas. No quoting: the flow-record format never
/// quotes numerics and label tokens carry no commas.
std::vector<std::string> split_csv_line(std::string_view line);

std::vector<std::string> split(std::string_view s, char sep);

/// Shortest decimal that parses back to the same double (to_chars).
std::string double_to_string(double v);

/// Full-string parse; accepts inf/nan spellings. nullopt when anything
/// other than a complete floating-point literal is present.
std::optional<double> parse_double(std::string_view s);

/// Left-pads/right-pads by code-point count so UTF-8 dashes align.
std::string pad_left(std::string_view s, std::size_t width);
std::string pad_right(std::string_view s, std::size_t width);

std::string format_double(double v, int decimals);

} // namespace flowsentry
