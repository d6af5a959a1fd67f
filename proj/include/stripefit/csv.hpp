#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace stripefit::csv {

// Plain comma splitting; the formats used here never quote fields.
std::vector<std::string_view> split(std::string_view line);

std::string_view trim(std::string_view s);

// Throws Error(kParse) naming the line and column on failure.
double parse_double(std::string_view field, std::size_t line_no, std::string_view column);
long long parse_int(std::string_view field, std::size_t line_no, std::string_view column);

// Shortest "%.{digits}g" rendering; 17 digits round-trips every double.
std::string format_double(double value, int significant_digits = 17);

}  // namespace stripefit::csv
