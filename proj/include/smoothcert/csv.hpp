#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>

namespace smoothcert::csv {

// First line of every CSV file the toolkit writes.
inline constexpr std::string_view kVersionLine = "# smoothcert v1";

// Shortest decimal that round-trips to the same double; "inf"/"nan" otherwise.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace smoothcert::csv
