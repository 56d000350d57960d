#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace anchorforge {

// Locale-independent number formatting for every file and report we emit.

/// Fixed notation, six decimals, '.' separator.
std::string fixed6(double v);
/// Shortest decimal that parses back to exactly `v`.
std::string round_trip(double v);
/// Strict parse of a whole field; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

/// Splits on `sep` without trimming. An empty input yields one empty field.
std::vector<std::string_view> split_fields(std::string_view s, char sep);
std::string_view trim(std::string_view s);

}  // namespace anchorforge
