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

#include "ralm/io/archive.hpp"

#include <sstream>

#include "ralm/io/binary.hpp"

namespace ralm::io {

const DenseMatrix& ParameterArchive::matrix(const std::string& name) const {
  for (const auto& [n, m] : matrices) {
    if (n == name) return m;
  }
  throw FormatError(magic + " archive: missing matrix " + name);
}

double ParameterArchive::config_value(const std::string& key) const {
  auto it = config.find(key);
  if (it == config.end()) throw FormatError(magic + " archive: missing config " + key);
  return it->second;
}

std::string serialize_archive(const ParameterArchive& archive) {
  std::ostringstream os(std::ios::binary);
  os.write(archive.magic.data(), static_cast<std::streamsize>(archive.magic.size()));
  write_pod<std::uint32_t>(os, ParameterArchive::kVersion);
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(archive.config.size()));
  for (const auto& [k, v] : archive.config) {
    write_string(os, k);
    write_pod<double>(os, v);
  }
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(archive.matrices.size()));
  for (const auto& [name, m] : archive.matrices) {
    write_string(os, name);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(m.rows()));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(m.cols()));
    os.write(reinterpret_cast<const char*>(m.data()),
             static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  return os.str();
}

ParameterArchive deserialize_archive(const std::string& bytes, const std::string& expected_magic) {
  std::istringstream is(bytes, std::ios::binary);
  std::string magic(expected_magic.size(), '\0');
  if (!is.read(magic.data(), static_cast<std::streamsize>(magic.size())) ||
      magic != expected_magic) {
    throw FormatError("archive: expected magic " + expected_magic);
  }
  if (read_pod<std::uint32_t>(is) != ParameterArchive::kVersion) {
    throw FormatError("archive: unsupported version");
  }
  ParameterArchive archive;
  archive.magic = magic;
  const auto nconfig = read_pod<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < nconfig; ++i) {
    std::string key = read_string(is);
    archive.config[key] = read_pod<double>(is);
  }
  const auto nmat = read_pod<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < nmat; ++i) {
    std::string name = read_string(is);
    const auto rows = read_pod<std::uint32_t>(is);
    const auto cols = read_pod<std::uint32_t>(is);
    DenseMatrix m(rows, cols);
    if (!is.read(reinterpret_cast<char*>(m.data()),
                 static_cast<std::streamsize>(m.size() * sizeof(double)))) {
      throw FormatError("archive: truncated matrix " + name);
    }
    archive.matrices.emplace_back(std::move(name), std::move(m));
  }
  return archive;
}

void write_archive(const std::string& path, const ParameterArchive& archive) {
  atomic_write(path, serialize_archive(archive));
}

ParameterArchive read_archive(const std::string& path, const std::string& expected_magic) {
  return deserialize_archive(read_file(path), expected_magic);
}

}  // namespace ralm::io
