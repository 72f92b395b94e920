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

#ifndef PHN_RNG_HPP
#define PHN_RNG_HPP

#include <cstdint>
#include <string_view>

namespace phn {

/// Counter-based deterministic generator. Output i is a pure function of
/// (key, i), so identical seeds and call sequences reproduce bit-exactly,
/// and independent child streams can be split off per module.
class Rng {
 public:
  explicit Rng(uint64_t seed) : key_(mix(seed ^ 0x7C339B5B1C9E40A1ull)) {}

  uint64_t next_u64() {
    counter_ += 0x9E3779B97F4A7C15ull;
    return mix(key_ + counter_);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased integer in [0, n). n must be > 0.
  uint32_t below(uint32_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return static_cast<uint32_t>(v % n);
  }

  /// Approximate standard normal via the sum of 12 uniforms. Arithmetic only,
  /// so results are identical across libm implementations.
  double normal() {
    double s = 0.0;
    for (int i = 0; i < 12; ++i) s += uniform();
    return s - 6.0;
  }

  /// Independent stream derived from this generator's key and a tag.
  Rng child(std::string_view tag) const {
    uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a over the tag
    for (char c : tag) {
      h ^= static_cast<uint8_t>(c);
      h *= 0x100000001B3ull;
    }
    return Rng(mix(key_ ^ h));
  }

  Rng child(uint64_t salt) const { return Rng(mix(key_ ^ mix(salt + 0x632BE59BD9B4E019ull))); }

 private:
  static uint64_t mix(uint64_t z) {
    z ^= z >> 30; z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27; z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  uint64_t key_;
  uint64_t counter_ = 0;
};

}  // namespace phn

#endif  // PHN_RNG_HPP
