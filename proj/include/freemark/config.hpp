/* Copyright 2026 The FreeMark Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef FREEMARK_CONFIG_HPP
#define FREEMARK_CONFIG_HPP

#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "freemark/error.hpp"

namespace freemark {

/// Flat `key = value` configuration. Lines starting with '#' and blank lines
/// are ignored; keys are dotted names such as `train.lr`. Later assignments
/// (and overrides) replace earlier ones.
class Config {
 public:
  Config() = default;

  static Config parse(std::string_view text, const std::string& source = "<config>") {
    Config cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
      auto s = trim(line);
      if (s.empty() || s.front() == '#') continue;
      auto eq = s.find('=');
      auto where = source + ":" + std::to_string(lineno);
      if (eq == std::string_view::npos) fail(ErrorCode::kConfig, where + ": expected 'key = value'");
      auto key = trim(s.substr(0, eq));
      auto value = trim(s.substr(eq + 1));
      if (key.empty()) fail(ErrorCode::kConfig, where + ": empty key");
      for (char c : key)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_'))
          fail(ErrorCode::kConfig, where + ": invalid character in key '" + std::string(key) + "'");
      cfg.values_[std::string(key)] = std::string(value);
      cfg.origin_[std::string(key)] = where;
    }
    return cfg;
  }

  static Config load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::kConfig, "cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
  }

  /// Applies `key=value`; used for command-line flags, which win over the file.
  void set(const std::string& key, const std::string& value, const std::string& origin = "flag") {
    values_[key] = value;
    origin_[key] = origin;
  }

  /// Applies a `key=value` override string.
  void set_override(std::string_view assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
      fail(ErrorCode::kConfig, "override '" + std::string(assignment) + "' must look like key=value");
    set(std::string(trim(assignment.substr(0, eq))), std::string(trim(assignment.substr(eq + 1))), "--set");
  }

  bool has(const std::string& key) const { return values_.contains(key); }

  std::string get_string(const std::string& key, const std::string& fallback) {
    return resolve(key, fallback);
  }

  double get_double(const std::string& key, double fallback) {
    std::ostringstream os;
    os.precision(17);
    os << fallback;
    auto text = resolve(key, os.str());
    try {
      std::size_t used = 0;
      double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    } catch (const std::logic_error&) {
      bad_value(key, "a number");
    }
  }

  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) {
    auto text = resolve(key, std::to_string(fallback));
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) bad_value(key, "a non-negative integer");
    return v;
  }

  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < fallback.size(); ++i) os << (i ? "," : "") << fallback[i];
    auto text = resolve(key, os.str());
    std::vector<double> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
      auto t = std::string(trim(item));
      try {
        std::size_t used = 0;
        out.push_back(std::stod(t, &used));
        if (used != t.size()) throw std::invalid_argument(t);
      } catch (const std::logic_error&) {
        bad_value(key, "a comma-separated list of numbers");
      }
    }
    return out;
  }

  std::vector<std::uint64_t> get_uints(const std::string& key, const std::vector<std::uint64_t>& fallback) {
    std::string joined;
    for (std::size_t i = 0; i < fallback.size(); ++i) joined += (i ? "," : "") + std::to_string(fallback[i]);
    auto text = resolve(key, joined);
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
      auto t = trim(item);
      if (t.empty()) continue;
      std::uint64_t v = 0;
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (ec != std::errc() || ptr != t.data() + t.size()) bad_value(key, "a comma-separated list of integers");
      out.push_back(v);
    }
    return out;
  }

  /// Keys that were set but never read; a typo guard.
  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : values_)
      if (!read_.contains(k)) out.push_back(k);
    return out;
  }

  /// Every resolved key (including defaults that were consulted), sorted.
  std::string echo() const {
    std::string out;
    for (const auto& [k, v] : resolved_) out += k + " = " + v + "\n";
    return out;
  }
  const std::map<std::string, std::string>& resolved() const { return resolved_; }

 private:
  static std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
  }

  std::string resolve(const std::string& key, const std::string& fallback) {
    auto it = values_.find(key);
    std::string v = it == values_.end() ? fallback : it->second;
    read_[key] = true;
    resolved_[key] = v;
    return v;
  }

  [[noreturn]] void bad_value(const std::string& key, const char* expected) const {
    auto it = origin_.find(key);
    std::string where = it == origin_.end() ? "default" : it->second;
    fail(ErrorCode::kConfig, where + ": value of '" + key + "' must be " + expected);
  }

  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> origin_;
  std::map<std::string, bool> read_;
  std::map<std::string, std::string> resolved_;
};

}  // namespace freemark

#endif  // FREEMARK_CONFIG_HPP
