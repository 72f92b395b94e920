/* Copyright 2026 The partialhn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace phn {

namespace {

constexpr char kMagic[8] = {'P', 'H', 'N', 'C', 'K', 'P', 'T', '1'};

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF),
                        static_cast<unsigned char>((v >> 16) & 0xFF),
                        static_cast<unsigned char>((v >> 24) & 0xFF)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw IoError("checkpoint: truncated file while reading u32");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void put_str(std::ostream& os, const std::string& s) {
  put_u32(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_str(std::istream& is) {
  const uint32_t n = get_u32(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw IoError("checkpoint: truncated file while reading string");
  return s;
}

void put_f32(std::ostream& os, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(os, bits);
}

float get_f32(std::istream& is) {
  const uint32_t bits = get_u32(is);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("checkpoint: cannot open " + path + " for writing");
  os.write(kMagic, 8);

  put_u32(os, static_cast<uint32_t>(header.size()));
  for (const auto& [k, v] : header) {
    put_str(os, k);
    put_str(os, v);
  }

  put_u32(os, static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_str(os, name);
    put_u32(os, static_cast<uint32_t>(t.shape().size()));
    for (int64_t d : t.shape()) put_u32(os, static_cast<uint32_t>(d));
    for (double v : t.values()) put_f32(os, static_cast<float>(v));
  }

  put_u32(os, static_cast<uint32_t>(manifest.size()));
  for (const auto& [name, shape] : manifest) {
    put_str(os, name);
    put_u32(os, static_cast<uint32_t>(shape.size()));
    for (int64_t d : shape) put_u32(os, static_cast<uint32_t>(d));
  }
  if (!os) throw IoError("checkpoint: write failed for " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0)
    throw IoError("checkpoint: bad magic in " + path);

  Checkpoint ck;
  const uint32_t nh = get_u32(is);
  for (uint32_t i = 0; i < nh; ++i) {
    std::string k = get_str(is);
    ck.header[k] = get_str(is);
  }

  const uint32_t nt = get_u32(is);
  for (uint32_t i = 0; i < nt; ++i) {
    std::string name = get_str(is);
    const uint32_t rank = get_u32(is);
    Shape shape(rank);
    for (uint32_t r = 0; r < rank; ++r) shape[r] = static_cast<int64_t>(get_u32(is));
    std::vector<double> vals(static_cast<size_t>(numel(shape)));
    for (double& v : vals) v = static_cast<double>(get_f32(is));
    ck.tensors.emplace(std::move(name), Tensor(std::move(shape), std::move(vals)));
  }

  const uint32_t nm = get_u32(is);
  for (uint32_t i = 0; i < nm; ++i) {
    std::string name = get_str(is);
    const uint32_t rank = get_u32(is);
    Shape shape(rank);
    for (uint32_t r = 0; r < rank; ++r) shape[r] = static_cast<int64_t>(get_u32(is));
    ck.manifest.emplace_back(std::move(name), std::move(shape));
  }
  return ck;
}

}  // namespace phn
