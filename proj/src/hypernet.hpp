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

#ifndef PHN_HYPERNET_HPP
#define PHN_HYPERNET_HPP

#include <map>
#include <string>
#include <vector>

#include "checkpoint.hpp"
#include "model.hpp"

namespace phn {

struct HyperConfig {
  int64_t embed_dim = 32;   // task embedding width
  int64_t hidden1 = 50;     // first trunk layer
  int64_t hidden2 = 32;     // second trunk layer
  int64_t h_out = 32;       // shared conditioning width consumed by heads
  int64_t lookup_dim = 8;   // per-input-channel lookup width d of conv heads
};

/// Parameters of the conv head for an (a -> b, kxk) target: a x d lookup
/// table plus an (h_out + d) -> b*k*k map shared across input channels.
int64_t conv_head_param_count(int64_t a, int64_t b, int64_t k, int64_t h_out, int64_t d);

/// Formula count of a full hypernetwork over `targets`: task embeddings,
/// trunk (with biases) and one head per target module. Must agree with
/// Hypernet parameter enumeration.
int64_t hypernet_param_count(const std::vector<ModuleSpec>& targets, const HyperConfig& cfg,
                             int num_tasks);

/// Task-conditioned weight generator: an embedding table, a two-hidden-layer
/// trunk producing a conditioning vector, and one head per target module
/// (channel-wise for convolutions, direct maps for batch-norm and linear).
class Hypernet {
 public:
  Hypernet(std::vector<ModuleSpec> targets, HyperConfig cfg, uint64_t seed);

  const HyperConfig& config() const { return cfg_; }
  const std::vector<ModuleSpec>& targets() const { return targets_; }

  /// Creates the embedding row for an unseen task exactly once; deterministic
  /// in (seed, task_id) regardless of creation order.
  void ensure_task(int task_id);
  bool knows_task(int task_id) const;

  /// Fills every suffix slot for the task. Differentiable w.r.t. the
  /// hypernetwork parameters when recorded on a tape; bitwise deterministic
  /// for fixed parameters.
  WeightSet generate(int task_id);

  /// Same computation against an explicit parameter map (virtual updates,
  /// snapshots). The map must share this hypernetwork's key set.
  WeightSet generate_using(const std::map<std::string, Tensor>& params, int task_id) const;

  std::map<std::string, Tensor>& params() { return params_; }
  const std::map<std::string, Tensor>& params() const { return params_; }
  std::vector<Tensor> param_list();  // values in name order

  int64_t param_count() const;

  /// Deep immutable copy; generation from it never touches live parameters.
  Hypernet snapshot() const;

  void fill_checkpoint(Checkpoint& ck) const;
  /// Restores parameter values from a checkpoint written by fill_checkpoint.
  void load_from_checkpoint(const Checkpoint& ck);

 private:
  void init_params();

  HyperConfig cfg_;
  uint64_t seed_;
  std::vector<ModuleSpec> targets_;
  std::map<std::string, Tensor> params_;
};

struct CompressionRow {
  int64_t d;
  int64_t total_params;
  double compression_pct;  // relative to the largest configured d
};

/// Parameter totals across lookup widths, anchored at 0% for the last entry
/// of `ds` (callers pass ascending widths).
std::vector<CompressionRow> compression_rows(const std::vector<ModuleSpec>& targets,
                                             HyperConfig cfg, const std::vector<int64_t>& ds,
                                             int num_tasks);

}  // namespace phn

#endif  // PHN_HYPERNET_HPP
