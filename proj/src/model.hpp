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

#ifndef PHN_MODEL_HPP
#define PHN_MODEL_HPP

#include <map>
#include <string>
#include <vector>

#include "ops.hpp"
#include "tensor.hpp"

namespace phn {

/// Named tensors filling the stateless parameter slots of a decomposed model.
using WeightSet = std::map<std::string, Tensor>;

/// Batch-norm running statistics keyed by module name.
using StatsStore = std::map<std::string, RunningStats>;

/// One parameterized module of the main model. Names are stable and key both
/// parameter storage and generated weight sets.
struct ModuleSpec {
  enum class Kind { Conv, BatchNorm, Linear };
  Kind kind;
  std::string name;  // e.g. "layer2.0.conv1"
  int segment;       // 0 = initial conv, 1..4 = residual stages, 5 = classifier
  int64_t in_c = 0, out_c = 0, k = 0;
  int stride = 1, padding = 0;

  int64_t param_count() const;
  /// Parameter entries as (name, shape) pairs, e.g. conv -> name.weight.
  std::vector<std::pair<std::string, Shape>> param_entries() const;
};

/// Resolves parameter names against base storage with an optional overlay of
/// generated weights; overlay entries win.
class WeightSource {
 public:
  explicit WeightSource(const std::map<std::string, Tensor>& base)
      : base_(&base), overlay_(nullptr) {}
  WeightSource(const std::map<std::string, Tensor>& base, const WeightSet& overlay)
      : base_(&base), overlay_(&overlay) {}
  const Tensor& get(const std::string& name) const;

 private:
  const std::map<std::string, Tensor>* base_;
  const WeightSet* overlay_;
};

/// Slim ResNet-18: initial 3x3 conv, four residual stages of two basic
/// blocks with widths nf/2nf/4nf/8nf, average pool and a linear classifier.
/// On 32x32 inputs the stage outputs are nf x32x32, 2nf x16x16, 4nf x8x8,
/// 8nf x4x4.
class MainModel {
 public:
  enum class ClassifierKind {
    Single,    // one linear head (its weights may be generated per task)
    MultiHead  // one independent linear head per task id
  };

  MainModel(int num_classes_per_task, int nf, ClassifierKind kind, uint64_t seed,
            int in_channels = 3);

  const std::vector<ModuleSpec>& modules() const { return modules_; }
  int nf() const { return nf_; }
  int num_classes() const { return num_classes_; }
  ClassifierKind classifier_kind() const { return kind_; }

  std::map<std::string, Tensor>& params() { return params_; }
  const std::map<std::string, Tensor>& params() const { return params_; }
  StatsStore& stats() { return stats_; }

  int64_t total_param_count() const;
  std::vector<std::string> param_names() const;

  /// Creates the head for a task (MultiHead only); deterministic per task id,
  /// idempotent.
  void ensure_head(int task_id);
  bool has_head(int task_id) const;

  /// Runs segments [from, to): 0 initial conv, 1..4 stages, 5 pool+classifier.
  /// Batch-norm sites read/update `stats` under `mode`.
  Tensor forward_range(const Tensor& x, int from, int to, BnMode mode, const WeightSource& w,
                       StatsStore& stats, int task_id) const;

  /// Segments [from, 4] followed by global average pool and flatten: the
  /// [N, 8nf] feature vectors consumed by the classifier.
  Tensor features_range(const Tensor& x, int from, BnMode mode, const WeightSource& w,
                        StatsStore& stats) const;

  /// Classifier head on pooled features.
  Tensor classify(const Tensor& features, const WeightSource& w, int task_id) const;

  /// Undecomposed forward with the model's own weights and stats.
  Tensor forward(const Tensor& x, BnMode mode, int task_id);

  /// Parameter names of segments [from, to); classifier names depend on the
  /// classifier kind (MultiHead enumerates all existing heads).
  std::vector<std::string> segment_param_names(int from, int to) const;

  /// Feature shape (C,H,W) after the frozen prefix of depth k.
  Shape latent_shape(int k, int64_t in_h, int64_t in_w) const;

  int in_channels() const { return in_channels_; }

 private:
  void build_modules();
  void init_params(uint64_t seed);
  Tensor run_block(const Tensor& x, const std::string& prefix, bool has_down, BnMode mode,
                   const WeightSource& w, StatsStore& stats) const;

  int num_classes_, nf_, in_channels_;
  ClassifierKind kind_;
  uint64_t seed_;
  std::vector<ModuleSpec> modules_;
  std::map<std::string, Tensor> params_;
  StatsStore stats_;
};

/// A main model split at freeze depth k: the prefix g (initial conv + stages
/// 1..k, parameters phi) and the suffix h (remaining stages + classifier,
/// slots omega). k = 0 makes g the identity with no parameters.
class DecomposedModel {
 public:
  DecomposedModel(MainModel model, int k);

  MainModel& model() { return model_; }
  const MainModel& model() const { return model_; }
  int freeze_depth() const { return k_; }

  std::vector<std::string> prefix_param_names() const;
  std::vector<std::string> suffix_param_names() const;
  /// (name, shape) slots the hypernetwork must fill.
  std::vector<std::pair<std::string, Shape>> suffix_slots() const;

  /// z = g(x). After freeze the prefix always runs in eval mode with its
  /// frozen statistics.
  Tensor forward_prefix(const Tensor& x, BnMode mode);

  /// Suffix with generated weights. Validates that `weights` covers exactly
  /// the suffix slots. Batch-norm sites use `suffix_stats`.
  Tensor forward_suffix_generated(const Tensor& z, const WeightSet& weights, int task_id,
                                  BnMode mode, StatsStore& suffix_stats) const;

  /// Suffix with the model's own weights (latent replay / naive paths).
  Tensor forward_suffix_own(const Tensor& z, int task_id, BnMode mode);

  /// Suffix stages + pool + flatten with the model's own weights; heads are
  /// applied separately so mixed-task batches share one pass.
  Tensor forward_suffix_features_own(const Tensor& z, BnMode mode);
  Tensor classify_own(const Tensor& features, int task_id);

  /// Full decomposed pass with generated weights.
  Tensor forward_generated(const Tensor& x, const WeightSet& weights, int task_id, BnMode mode,
                           StatsStore& suffix_stats);

  void freeze();
  bool frozen() const { return frozen_; }
  uint64_t frozen_hash() const { return frozen_hash_; }
  /// Hash of the current prefix parameter bytes (immutability checks).
  uint64_t prefix_hash() const;

 private:
  MainModel model_;
  int k_;
  bool frozen_ = false;
  uint64_t frozen_hash_ = 0;
};

MainModel build_slim_resnet(int num_classes_per_task, int nf, MainModel::ClassifierKind kind,
                            uint64_t seed, int in_channels = 3);
DecomposedModel decompose(MainModel model, int k);

}  // namespace phn

#endif  // PHN_MODEL_HPP
