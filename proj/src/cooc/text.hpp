#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cooc {

// Splits on every occurrence of sep; empty fields are kept.
inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

// Strips a trailing '\r' so CRLF files parse like LF files.
inline std::string_view chomp(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

inline bool is_blank_or_comment(std::string_view line) {
  auto t = trim(line);
  return t.empty() || t.front() == '#';
}

}  // namespace cooc
