#include "stripefit/csv.hpp"

#include <charconv>
#include <cstdio>
#include <string>

#include "stripefit/error.hpp"

namespace stripefit::csv {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view field, std::size_t line_no, std::string_view column) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = field.data() + field.size();
  if (!field.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": column '" + std::string(column) +
                                       "' is not a number: '" + std::string(field) + "'");
  }
  return value;
}

long long parse_int(std::string_view field, std::size_t line_no, std::string_view column) {
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": column '" + std::string(column) +
                                       "' is not an integer: '" + std::string(field) + "'");
  }
  return value;
}

std::string format_double(double value, int significant_digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", significant_digits, value);
  return buf;
}

}  // namespace stripefit::csv
