// Copyright 2026 The datl Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "datl/error.hpp"

namespace datl {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  text = trim(text);
  if (text.empty()) return false;
  if constexpr (std::is_floating_point_v<T>) {
    // from_chars for floating point is not available on every toolchain we target.
    std::string buf(text);
    char* end = nullptr;
    const double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size()) return false;
    out = static_cast<T>(v);
    return true;
  } else {
    const auto* first = text.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
  }
}

}  // namespace detail

/// Flat `key = value` configuration. Blank lines and `#` comments are ignored.
/// Values are kept as text and converted on access; every accessed key is
/// recorded so callers can reject typos with `reject_unknown`.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::string_view text, const std::string& origin = "<string>") {
    KeyValueConfig cfg;
    std::size_t line_no = 0;
    for (auto line : detail::split(text, '\n')) {
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw FormatError(origin, line_no, "expected key=value");
      const auto key = std::string(detail::trim(line.substr(0, eq)));
      if (key.empty()) throw FormatError(origin, line_no, "empty key");
      if (cfg.values_.count(key)) throw FormatError(origin, line_no, "duplicate key '" + key + "'");
      cfg.values_[key] = std::string(detail::trim(line.substr(eq + 1)));
    }
    return cfg;
  }

  static KeyValueConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  template <typename T>
  T get(const std::string& key, T fallback) const {
    used_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return convert<T>(key, it->second);
  }

  template <typename T>
  T require(const std::string& key) const {
    used_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) throw Error("missing config key '" + key + "'");
    return convert<T>(key, it->second);
  }

  /// Comma-separated list of numbers.
  template <typename T>
  std::vector<T> get_list(const std::string& key, std::vector<T> fallback) const {
    used_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::vector<T> out;
    for (auto part : detail::split(it->second, ',')) {
      T v{};
      if (!detail::parse_number(part, v)) throw Error("config key '" + key + "': bad list element");
      out.push_back(v);
    }
    return out;
  }

  void reject_unknown() const {
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) throw Error("unknown config key '" + k + "'");
  }

  /// Canonical `key=value` lines in key order.
  std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  template <typename T>
  static T convert(const std::string& key, const std::string& text) {
    if constexpr (std::is_same_v<T, std::string>) {
      return text;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw Error("config key '" + key + "': expected boolean, got '" + text + "'");
    } else {
      T v{};
      if (!detail::parse_number(text, v))
        throw Error("config key '" + key + "': cannot parse '" + text + "'");
      return v;
    }
  }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

/// FNV-1a 64-bit, rendered as 16 hex digits.
inline std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = digits[h & 0xF];
  return out;
}

}  // namespace datl
