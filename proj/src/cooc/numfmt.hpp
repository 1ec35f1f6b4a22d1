#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <system_error>

#include "cooc/error.hpp"

namespace cooc {

// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw Error("cannot format number");
  return std::string(buf, end);
}

inline void append_double(std::string& out, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw Error("cannot format number");
  out.append(buf, end);
}

inline double parse_double(std::string_view s, std::size_t line = 0) {
  double v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || first == last)
    throw ParseError("invalid number '" + std::string(s) + "'", line);
  return v;
}

template <typename Int>
Int parse_int(std::string_view s, std::size_t line = 0) {
  Int v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw ParseError("invalid integer '" + std::string(s) + "'", line);
  return v;
}

}  // namespace cooc
