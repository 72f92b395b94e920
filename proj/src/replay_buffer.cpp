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

#include "replay_buffer.hpp"

#include <algorithm>

namespace phn {

ReplayBuffer::ReplayBuffer(int64_t capacity, uint64_t seed)
    : capacity_(capacity), rng_(Rng(seed).child("replay_buffer")) {
  if (capacity < 1)
    throw ContractError("strategies", "buffer_update", "capacity must be positive");
}

int64_t ReplayBuffer::quota_of(size_t class_index) const {
  const int64_t k = static_cast<int64_t>(slots_.size());
  const int64_t base = capacity_ / k;
  const int64_t extra = capacity_ % k;
  return base + (static_cast<int64_t>(class_index) < extra ? 1 : 0);
}

void ReplayBuffer::rebalance() {
  size_t idx = 0;
  for (auto& [key, entries] : slots_) {
    const int64_t quota = quota_of(idx++);
    while (static_cast<int64_t>(entries.size()) > quota) {
      const uint32_t victim = rng_.below(static_cast<uint32_t>(entries.size()));
      entries[victim] = std::move(entries.back());
      entries.pop_back();
    }
  }
}

void ReplayBuffer::insert(Tensor latent, int label, int task_id) {
  const Key key{task_id, label};
  if (!slots_.count(key)) {
    slots_[key] = {};
    seen_[key] = 0;
    rebalance();  // quotas shrink when a new class arrives
  }
  auto& entries = slots_[key];
  const int64_t n_seen = ++seen_[key];
  size_t idx = 0;
  for (const auto& [k, e] : slots_) {
    if (k == key) break;
    ++idx;
  }
  const int64_t quota = quota_of(idx);
  if (static_cast<int64_t>(entries.size()) < quota) {
    entries.push_back({std::move(latent), label, task_id});
  } else if (quota > 0) {
    const uint32_t j = static_cast<uint32_t>(rng_.next_u64() % static_cast<uint64_t>(n_seen));
    if (j < static_cast<uint32_t>(quota))
      entries[j] = {std::move(latent), label, task_id};
  }
}

int64_t ReplayBuffer::size() const {
  int64_t n = 0;
  for (const auto& [key, entries] : slots_) n += static_cast<int64_t>(entries.size());
  return n;
}

std::vector<std::pair<std::pair<int, int>, int64_t>> ReplayBuffer::class_counts() const {
  std::vector<std::pair<Key, int64_t>> out;
  for (const auto& [key, entries] : slots_)
    out.emplace_back(key, static_cast<int64_t>(entries.size()));
  return out;
}

std::vector<const ReplayBuffer::Entry*> ReplayBuffer::sample(int64_t n) {
  std::vector<const Entry*> flat;
  flat.reserve(static_cast<size_t>(size()));
  for (const auto& [key, entries] : slots_)
    for (const Entry& e : entries) flat.push_back(&e);
  const int64_t take = std::min<int64_t>(n, static_cast<int64_t>(flat.size()));
  for (int64_t i = 0; i < take; ++i) {
    const uint32_t j =
        static_cast<uint32_t>(i) + rng_.below(static_cast<uint32_t>(flat.size() - i));
    std::swap(flat[static_cast<size_t>(i)], flat[static_cast<size_t>(j)]);
  }
  flat.resize(static_cast<size_t>(take));
  return flat;
}

}  // namespace phn
