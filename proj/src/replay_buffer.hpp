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

#ifndef PHN_REPLAY_BUFFER_HPP
#define PHN_REPLAY_BUFFER_HPP

#include <map>
#include <vector>

#include "tensor.hpp"

namespace phn {

/// Class-balanced reservoir of latent features. Capacity is re-split equally
/// across all (task, label) classes seen so far (counts differ by at most
/// one); within a class, uniform reservoir sampling. Deterministic under a
/// fixed seed and insertion sequence.
class ReplayBuffer {
 public:
  struct Entry {
    Tensor latent;  // [C,H,W]
    int label;
    int task_id;
  };

  ReplayBuffer(int64_t capacity, uint64_t seed);

  void insert(Tensor latent, int label, int task_id);

  int64_t size() const;
  int64_t capacity() const { return capacity_; }
  int num_classes_seen() const { return static_cast<int>(slots_.size()); }
  /// Stored count per (task, label) class, in key order.
  std::vector<std::pair<std::pair<int, int>, int64_t>> class_counts() const;

  /// Uniform sample of min(n, size()) distinct stored entries.
  std::vector<const Entry*> sample(int64_t n);

  bool empty() const { return size() == 0; }

 private:
  using Key = std::pair<int, int>;  // (task_id, label)
  int64_t quota_of(size_t class_index) const;
  void rebalance();

  int64_t capacity_;
  Rng rng_;
  std::map<Key, std::vector<Entry>> slots_;
  std::map<Key, int64_t> seen_;  // per-class stream counts for reservoir odds
};

}  // namespace phn

#endif  // PHN_REPLAY_BUFFER_HPP
