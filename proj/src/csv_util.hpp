#ifndef MFGPC_SRC_CSV_UTIL_HPP
#define MFGPC_SRC_CSV_UTIL_HPP

#include <charconv>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "mfgpc/types.hpp"

namespace mfgpc::detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view tok, std::size_t line) {
  tok = trim(tok);
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(line, "not a number: '" + std::string(tok) + "'");
  }
  return v;
}

inline long long parse_int(std::string_view tok, std::size_t line) {
  tok = trim(tok);
  long long v = 0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ParseError(line, "not an integer: '" + std::string(tok) + "'");
  }
  return v;
}

/// Shortest text that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace mfgpc::detail

#endif  // MFGPC_SRC_CSV_UTIL_HPP
