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

#ifndef PHN_STRATEGY_HPP
#define PHN_STRATEGY_HPP

#include <functional>
#include <optional>

#include "hypernet.hpp"
#include "model.hpp"
#include "replay_buffer.hpp"
#include "streams.hpp"

namespace phn {

struct TrainConfig {
  double alpha = 0.001;  // main-model learning rate
  double beta = 0.001;   // hypernetwork learning rate
  double lambda = 0.5;   // regularization mixing coefficient
  int epochs_per_experience = 1;
  int batch_size = 32;
  uint64_t seed = 0;
  bool lookahead = true;
  double replay_coefficient = 1.0;  // latent replay
  int64_t buffer_capacity = 200;    // latent replay
  bool early_stop = false;          // stop on training-loss plateau

  void validate() const;
};

struct StepRecord {
  int64_t step = 0;
  int experience = 0;
  double loss_ce = 0.0;
  double loss_h = 0.0;
  double cosine = 0.0;
  double wall_ms = 0.0;
};

using StepLogger = std::function<void(const StepRecord&)>;

/// Result of one regularized update, including the raw gradients so tests
/// can replay the algebra independently.
struct UpdateReport {
  double loss_ce = 0.0;
  double loss_h = 0.0;
  double cosine = 0.0;
  std::vector<Tensor> g1, g2, combined;
};

using LossFn = std::function<Tensor(const std::vector<Tensor>&)>;

/// Look-ahead update over `params`:
///   g1 = d ce/d params at params
///   params' = params - beta * g1            (virtual, live params untouched)
///   g2 = d reg/d params' at params'         (first-order estimate; the
///                                            second-order correction through
///                                            g1 would attach here)
///   combined = (1-lambda) * g1 + lambda * g2
///   params -= beta * combined
/// lambda == 0 takes combined = g1 exactly, so the update is bitwise equal to
/// a plain cross-entropy step. Also records cos(g1, g2).
UpdateReport lookahead_update(std::vector<Tensor>& params, const LossFn& ce_loss,
                              const LossFn& reg_loss, double beta, double lambda);

/// Single backward on ce + lambda * reg evaluated at the live parameters,
/// then params -= beta * grad.
UpdateReport naive_regularized_update(std::vector<Tensor>& params, const LossFn& ce_loss,
                                      const LossFn& reg_loss, double beta, double lambda);

/// Squared L2 distance between two weight sets over all matching slots;
/// differentiable through `live`.
Tensor weight_set_sq_distance(const WeightSet& live, const WeightSet& reference);

class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual std::string name() const = 0;
  virtual void train_experience(const Experience& e, int experience_index,
                                const StepLogger& log) = 0;
  /// Accuracy on a test set, task id given (task-incremental evaluation).
  /// Never mutates parameters.
  virtual double evaluate_task(const Experience& e, int task_id) = 0;
  virtual void save_checkpoints(const std::string& dir) const {}
};

/// Accuracy row after training through experience upto_t: one entry per
/// experience i <= upto_t.
std::vector<double> evaluate_row(Strategy& s, const Stream& stream, int upto_t);

/// Partial hypernetwork training: joint SGD on the first experience, then
/// freeze the prefix and continue with look-ahead (or directly regularized)
/// hypernetwork updates against the stored converged snapshot.
class PartialHNStrategy : public Strategy {
 public:
  PartialHNStrategy(DecomposedModel dec, HyperConfig hcfg, TrainConfig cfg);

  std::string name() const override { return "partial-hn"; }
  void train_experience(const Experience& e, int experience_index,
                        const StepLogger& log) override;
  double evaluate_task(const Experience& e, int task_id) override;
  void save_checkpoints(const std::string& dir) const override;

  DecomposedModel& decomposed() { return dec_; }
  Hypernet& hypernet() { return hn_; }
  bool has_snapshot() const { return snapshot_.has_value(); }

  /// Sum over `prev_tasks` of the squared distance between snapshot and live
  /// generated weight sets. Contract: a snapshot exists and prev_tasks is
  /// nonempty (both fail inside experience 1).
  Tensor regularizer_loss(const std::vector<int>& prev_tasks);

  /// One update on an explicit batch (exposed for the algorithm-identity
  /// tests). Requires experience_index >= 1 machinery: frozen prefix and a
  /// stored snapshot.
  UpdateReport regularized_step(const Tensor& x, const std::vector<int>& labels, int task_id,
                                bool use_lookahead);

 private:
  std::vector<Tensor> psi_list();
  std::map<std::string, Tensor> psi_map(const std::vector<Tensor>& params) const;
  void refresh_snapshot_cache(const std::vector<int>& prev_tasks);
  StatsStore& stats_for(int task_id);

  DecomposedModel dec_;
  Hypernet hn_;
  std::optional<Hypernet> snapshot_;
  std::map<int, WeightSet> snapshot_ws_;        // per previous task, constants
  std::map<int, StatsStore> task_stats_;        // live per-task suffix stats
  std::map<int, StatsStore> snapshot_stats_;    // copied at experience boundaries
  std::vector<int> seen_tasks_;
  TrainConfig cfg_;
  int64_t global_step_ = 0;
};

/// Latent replay: standard training on the first experience, then the prefix
/// freezes and stored latents are replayed through the suffix with their own
/// task heads.
class LatentReplayStrategy : public Strategy {
 public:
  LatentReplayStrategy(DecomposedModel dec, TrainConfig cfg);

  std::string name() const override { return "latent-replay"; }
  void train_experience(const Experience& e, int experience_index,
                        const StepLogger& log) override;
  double evaluate_task(const Experience& e, int task_id) override;
  void save_checkpoints(const std::string& dir) const override;

  DecomposedModel& decomposed() { return dec_; }
  ReplayBuffer& buffer() { return buffer_; }

  /// Loss of one replay-regularized step on an explicit batch (exposed for
  /// the additivity tests). Returns {loss_total, loss_current, loss_replay}.
  std::array<double, 3> step_losses(const Tensor& x, const std::vector<int>& labels, int task_id);

 private:
  void train_step(const Tensor& x, const std::vector<int>& labels, int task_id, bool first_exp,
                  StepRecord& rec);

  DecomposedModel dec_;
  ReplayBuffer buffer_;
  TrainConfig cfg_;
  std::vector<int> seen_tasks_;
  int64_t global_step_ = 0;
};

/// Plain SGD fine-tuning over the stream with a multi-head classifier; no
/// freezing, no replay, no regularization.
class NaiveStrategy : public Strategy {
 public:
  NaiveStrategy(MainModel model, TrainConfig cfg);

  std::string name() const override { return "naive"; }
  void train_experience(const Experience& e, int experience_index,
                        const StepLogger& log) override;
  double evaluate_task(const Experience& e, int task_id) override;
  void save_checkpoints(const std::string& dir) const override;

  MainModel& model() { return model_; }

 private:
  MainModel model_;
  TrainConfig cfg_;
  int64_t global_step_ = 0;
};

}  // namespace phn

#endif  // PHN_STRATEGY_HPP
