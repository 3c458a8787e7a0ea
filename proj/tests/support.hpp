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

#ifndef FREEMARK_TESTS_SUPPORT_HPP
#define FREEMARK_TESTS_SUPPORT_HPP

#include <filesystem>
#include <random>
#include <string>

#include "freemark/freemark.hpp"

namespace freemark::testing {

// Default desk-scale host, trained once per process.
inline const HostContext& default_host() {
  static const HostContext ctx = [] {
    Config c;
    return prepare_host(HostSetup::from_config(c));
  }();
  return ctx;
}

inline HostSetup default_setup() {
  Config c;
  return HostSetup::from_config(c);
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("freemark-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace freemark::testing

#endif  // FREEMARK_TESTS_SUPPORT_HPP
