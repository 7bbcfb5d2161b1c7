// Copyright 2026 The RALM Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ralm/numeric/dense.hpp"

namespace ralm::io {

/// Named float64 matrices plus scalar configuration behind a short magic
/// string. Layout: magic bytes, u32 version, u32 config count, {string key,
/// f64 value}..., u32 matrix count, {string name, u32 rows, u32 cols,
/// rows*cols f64 row-major}...
struct ParameterArchive {
  static constexpr std::uint32_t kVersion = 1;

  std::string magic;
  std::map<std::string, double> config;
  std::vector<std::pair<std::string, DenseMatrix>> matrices;

  const DenseMatrix& matrix(const std::string& name) const;
  double config_value(const std::string& key) const;
};

std::string serialize_archive(const ParameterArchive& archive);
/// Throws FormatError when the magic differs from `expected_magic`.
ParameterArchive deserialize_archive(const std::string& bytes, const std::string& expected_magic);

void write_archive(const std::string& path, const ParameterArchive& archive);
ParameterArchive read_archive(const std::string& path, const std::string& expected_magic);

}  // namespace ralm::io
