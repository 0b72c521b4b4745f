#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace rca {

// Fixed notation with trailing zeros trimmed, keeping at least one decimal ("600.0", "8.5").
std::string format_decimal(double value, int max_decimals);
// Integer rendering of an integral-valued double.
std::string format_integer(double value);

std::vector<std::string> split(std::string_view text, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string_view trim(std::string_view text);

double parse_double(std::string_view text);
long long parse_int(std::string_view text);

// "YYYY-MM-DD hh:mm:ss" in UTC.
std::string format_timestamp(std::int64_t epoch_seconds);
std::int64_t parse_timestamp(std::string_view text);

}  // namespace rca
