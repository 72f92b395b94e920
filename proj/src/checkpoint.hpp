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

#ifndef PHN_CHECKPOINT_HPP
#define PHN_CHECKPOINT_HPP

#include <map>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace phn {

/// Flat named-tensor container. Byte layout (all integers little-endian
/// uint32, all values little-endian IEEE float32) is documented in
/// docs/FORMATS.md and is stable within a major version.
struct Checkpoint {
  std::map<std::string, std::string> header;      // e.g. nf, k, frozen_hash
  std::map<std::string, Tensor> tensors;          // name -> values
  std::vector<std::pair<std::string, Shape>> manifest;  // optional slot listing

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace phn

#endif  // PHN_CHECKPOINT_HPP
