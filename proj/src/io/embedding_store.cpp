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

#include "ralm/io/embedding_store.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ralm/io/binary.hpp"

namespace ralm::io {

void atomic_write(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + tmp + " for writing");
    os.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!os) throw Error("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error("cannot rename " + tmp + " to " + path);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DependencyError("missing file: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string EmbeddingStore::serialize() const {
  std::ostringstream os(std::ios::binary);
  os.write("RALM", 4);
  write_pod<std::uint32_t>(os, kVersion);
  write_pod<std::uint64_t>(os, ids_.size());
  write_pod<std::uint32_t>(os, dim_);
  write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(space_));
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    write_string(os, ids_[i]);
    os.write(reinterpret_cast<const char*>(data_.data() + i * dim_),
             static_cast<std::streamsize>(dim_ * sizeof(float)));
  }
  return os.str();
}

EmbeddingStore EmbeddingStore::deserialize(const std::string& bytes) {
  std::istringstream is(bytes, std::ios::binary);
  char magic[4];
  if (!is.read(magic, 4) || std::string(magic, 4) != "RALM") {
    throw FormatError("embedding store: bad magic");
  }
  const auto version = read_pod<std::uint32_t>(is);
  if (version != kVersion) throw FormatError("embedding store: unsupported version");
  const auto count = read_pod<std::uint64_t>(is);
  const auto dim = read_pod<std::uint32_t>(is);
  const auto tag = read_pod<std::uint8_t>(is);
  if (tag > 1) throw FormatError("embedding store: unknown space tag");
  EmbeddingStore store(static_cast<EmbeddingSpace>(tag), dim);
  RowVectorX<float> v(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string id = read_string(is);
    if (!is.read(reinterpret_cast<char*>(v.data()),
                 static_cast<std::streamsize>(dim * sizeof(float)))) {
      throw FormatError("embedding store: truncated record");
    }
    store.add(id, v);
  }
  return store;
}

void EmbeddingStore::write(const std::string& path) const { atomic_write(path, serialize()); }

EmbeddingStore EmbeddingStore::read(const std::string& path) { return deserialize(read_file(path)); }

}  // namespace ralm::io
