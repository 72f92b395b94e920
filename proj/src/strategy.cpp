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

#include "strategy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "tape.hpp"

namespace phn {

namespace {

constexpr const char* kModule = "strategies";

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::vector<std::vector<int64_t>> make_batches(int64_t n, int batch_size, Rng& rng) {
  std::vector<int64_t> order(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  for (int64_t i = n - 1; i > 0; --i)
    std::swap(order[static_cast<size_t>(i)], order[rng.below(static_cast<uint32_t>(i + 1))]);
  std::vector<std::vector<int64_t>> batches;
  for (int64_t at = 0; at < n; at += batch_size) {
    const int64_t end = std::min<int64_t>(at + batch_size, n);
    batches.emplace_back(order.begin() + at, order.begin() + end);
  }
  return batches;
}

double cosine_of(const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    auto av = a[i].values(), bv = b[i].values();
    for (size_t j = 0; j < av.size(); ++j) {
      dot += av[j] * bv[j];
      na += av[j] * av[j];
      nb += bv[j] * bv[j];
    }
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

int argmax_row(std::span<const double> row) {
  int best = 0;
  for (size_t c = 1; c < row.size(); ++c)
    if (row[c] > row[static_cast<size_t>(best)]) best = static_cast<int>(c);
  return best;
}

/// Accuracy of `logits_fn` over a dataset, evaluated in fixed-size batches.
double accuracy_over(const Dataset& ds, const std::function<Tensor(const Tensor&)>& logits_fn) {
  NoGradScope no_grad;
  const int64_t n = ds.size();
  int64_t correct = 0;
  constexpr int64_t kBatch = 64;
  for (int64_t at = 0; at < n; at += kBatch) {
    std::vector<int64_t> idx;
    for (int64_t i = at; i < std::min(at + kBatch, n); ++i) idx.push_back(i);
    auto [x, y] = gather(ds, idx);
    Tensor logits = logits_fn(x);
    const int64_t classes = logits.dim(1);
    auto lv = logits.values();
    for (size_t r = 0; r < idx.size(); ++r) {
      const int pred = argmax_row(lv.subspan(r * static_cast<size_t>(classes),
                                             static_cast<size_t>(classes)));
      if (pred == y[r]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

/// Rolling plateau detector: stop after 3 consecutive epochs whose relative
/// improvement is below 1e-3.
class PlateauStop {
 public:
  bool update(double epoch_loss) {
    if (have_prev_) {
      const double rel = (prev_ - epoch_loss) / std::max(std::fabs(prev_), 1e-12);
      flat_ = rel < 1e-3 ? flat_ + 1 : 0;
    }
    prev_ = epoch_loss;
    have_prev_ = true;
    return flat_ >= 3;
  }

 private:
  double prev_ = 0.0;
  bool have_prev_ = false;
  int flat_ = 0;
};

Tensor slice_sample(const Tensor& batch, int64_t row) {
  const int64_t per = batch.size() / batch.dim(0);
  Shape shape(batch.shape().begin() + 1, batch.shape().end());
  auto v = batch.values();
  return Tensor(std::move(shape),
                std::vector<double>(&v[static_cast<size_t>(row * per)],
                                    &v[static_cast<size_t>(row * per)] + per));
}

}  // namespace

void TrainConfig::validate() const {
  if (alpha <= 0.0) throw ConfigError("strategies: alpha must be > 0");
  if (beta <= 0.0) throw ConfigError("strategies: beta must be > 0");
  if (lambda < 0.0 || lambda > 1.0) throw ConfigError("strategies: lambda must be in [0,1]");
  if (epochs_per_experience < 0) throw ConfigError("strategies: epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("strategies: batch_size must be >= 1");
  if (replay_coefficient < 0.0) throw ConfigError("strategies: replay coefficient must be >= 0");
  if (buffer_capacity < 1) throw ConfigError("strategies: buffer capacity must be >= 1");
}

Tensor weight_set_sq_distance(const WeightSet& live, const WeightSet& reference) {
  if (live.size() != reference.size())
    throw ContractError(kModule, "regularizer", "weight sets differ in slot count");
  Tensor total = Tensor::zeros({1});
  for (const auto& [name, t] : live) {
    auto it = reference.find(name);
    if (it == reference.end())
      throw ContractError(kModule, "regularizer", "reference set is missing slot " + name);
    total = add(total, sum_sq_diff(t, it->second));
  }
  return total;
}

UpdateReport lookahead_update(std::vector<Tensor>& params, const LossFn& ce_loss,
                              const LossFn& reg_loss, double beta, double lambda) {
  UpdateReport rep;

  Tape t1;
  {
    TapeScope scope(&t1);
    Tensor lce = ce_loss(params);
    rep.loss_ce = lce.item();
    rep.g1 = t1.gradients(lce, params, /*allow_unknown=*/true);
  }

  // Virtual parameters; the live ones stay untouched.
  std::vector<Tensor> virt;
  virt.reserve(params.size());
  {
    NoGradScope no_grad;
    for (size_t i = 0; i < params.size(); ++i) {
      std::vector<double> v(params[i].values().begin(), params[i].values().end());
      auto g = rep.g1[i].values();
      for (size_t j = 0; j < v.size(); ++j) v[j] -= beta * g[j];
      Tensor t(params[i].shape(), std::move(v), true);
      quantize(t.values());
      virt.push_back(std::move(t));
    }
  }

  Tape t2;
  {
    TapeScope scope(&t2);
    Tensor lh = reg_loss(virt);
    rep.loss_h = lh.item();
    // First-order estimate: gradients of the regularizer at the virtual
    // parameters, read back as gradients w.r.t. the live ones. The
    // second-order correction through the CE gradient would attach here.
    rep.g2 = t2.gradients(lh, virt, /*allow_unknown=*/true);
  }

  rep.cosine = cosine_of(rep.g1, rep.g2);

  rep.combined.reserve(params.size());
  if (lambda == 0.0) {
    rep.combined = rep.g1;  // exact: the update degenerates to a plain CE step
  } else {
    for (size_t i = 0; i < params.size(); ++i) {
      std::vector<double> v(static_cast<size_t>(rep.g1[i].size()));
      auto a = rep.g1[i].values(), b = rep.g2[i].values();
      for (size_t j = 0; j < v.size(); ++j) v[j] = (1.0 - lambda) * a[j] + lambda * b[j];
      Tensor t(rep.g1[i].shape(), std::move(v));
      quantize(t.values());
      rep.combined.push_back(std::move(t));
    }
  }

  sgd_step(params, rep.combined, beta);
  return rep;
}

UpdateReport naive_regularized_update(std::vector<Tensor>& params, const LossFn& ce_loss,
                                      const LossFn& reg_loss, double beta, double lambda) {
  UpdateReport rep;
  Tape tape;
  TapeScope scope(&tape);
  Tensor lce = ce_loss(params);
  Tensor lh = reg_loss(params);
  Tensor total = add(lce, scale(lh, lambda));
  rep.loss_ce = lce.item();
  rep.loss_h = lh.item();
  rep.g1 = tape.gradients(lce, params, true);
  rep.g2 = tape.gradients(lh, params, true);
  rep.combined = tape.gradients(total, params, true);
  rep.cosine = cosine_of(rep.g1, rep.g2);
  sgd_step(params, rep.combined, beta);
  return rep;
}

std::vector<double> evaluate_row(Strategy& s, const Stream& stream, int upto_t) {
  if (upto_t < 0 || upto_t >= static_cast<int>(stream.experiences.size()))
    throw ContractError(kModule, "evaluate", "row index out of range");
  std::vector<double> row;
  for (int i = 0; i <= upto_t; ++i)
    row.push_back(s.evaluate_task(stream.experiences[static_cast<size_t>(i)],
                                  stream.experiences[static_cast<size_t>(i)].task_id));
  return row;
}

// ---------------------------------------------------------------------------
// Partial hypernetwork strategy
// ---------------------------------------------------------------------------

PartialHNStrategy::PartialHNStrategy(DecomposedModel dec, HyperConfig hcfg, TrainConfig cfg)
    : dec_(std::move(dec)),
      hn_(
          [&] {
            std::vector<ModuleSpec> targets;
            const int from = dec_.freeze_depth() == 0 ? 0 : dec_.freeze_depth() + 1;
            for (const ModuleSpec& m : dec_.model().modules())
              if (m.segment >= from) targets.push_back(m);
            return targets;
          }(),
          hcfg, cfg.seed),
      cfg_(cfg) {
  cfg_.validate();
  if (dec_.model().classifier_kind() != MainModel::ClassifierKind::Single)
    throw ConfigError("strategies: partial-hn requires the single generated classifier");
}

std::vector<Tensor> PartialHNStrategy::psi_list() { return hn_.param_list(); }

std::map<std::string, Tensor> PartialHNStrategy::psi_map(
    const std::vector<Tensor>& params) const {
  std::map<std::string, Tensor> out;
  size_t i = 0;
  for (const auto& [name, t] : hn_.params()) {
    if (i >= params.size())
      throw ContractError(kModule, "lookahead_step", "parameter list/name mismatch");
    out.emplace(name, params[i++]);
  }
  return out;
}

StatsStore& PartialHNStrategy::stats_for(int task_id) { return task_stats_[task_id]; }

void PartialHNStrategy::refresh_snapshot_cache(const std::vector<int>& prev_tasks) {
  NoGradScope no_grad;
  for (int j : prev_tasks)
    if (!snapshot_ws_.count(j))
      snapshot_ws_.emplace(j, snapshot_->generate_using(snapshot_->params(), j));
}

Tensor PartialHNStrategy::regularizer_loss(const std::vector<int>& prev_tasks) {
  if (!snapshot_)
    throw ContractError(kModule, "regularizer",
                        "no stored snapshot (not available in experience 1)");
  if (prev_tasks.empty())
    throw ContractError(kModule, "regularizer", "previous task set is empty");
  refresh_snapshot_cache(prev_tasks);
  Tensor total = Tensor::zeros({1});
  for (int j : prev_tasks)
    total = add(total, weight_set_sq_distance(hn_.generate_using(hn_.params(), j),
                                              snapshot_ws_.at(j)));
  return total;
}

UpdateReport PartialHNStrategy::regularized_step(const Tensor& x, const std::vector<int>& labels,
                                                 int task_id, bool use_lookahead) {
  if (!snapshot_)
    throw ContractError(kModule, "lookahead_step",
                        "missing snapshot: the first experience trains with plain SGD");
  std::vector<int> prev;
  for (int t : seen_tasks_)
    if (t != task_id) prev.push_back(t);
  if (prev.empty())
    throw ContractError(kModule, "lookahead_step", "no previous tasks to regularize against");
  refresh_snapshot_cache(prev);
  hn_.ensure_task(task_id);

  Tensor z;
  {
    NoGradScope no_grad;
    z = dec_.forward_prefix(x, BnMode::Eval);
  }

  auto ce = [&](const std::vector<Tensor>& params) {
    WeightSet ws = hn_.generate_using(psi_map(params), task_id);
    Tensor logits = dec_.forward_suffix_generated(z, ws, task_id, BnMode::Train,
                                                  stats_for(task_id));
    return cross_entropy(logits, labels);
  };
  auto reg = [&](const std::vector<Tensor>& params) {
    auto map = psi_map(params);
    Tensor total = Tensor::zeros({1});
    for (int j : prev)
      total = add(total, weight_set_sq_distance(hn_.generate_using(map, j), snapshot_ws_.at(j)));
    return total;
  };

  std::vector<Tensor> psi = psi_list();
  return use_lookahead ? lookahead_update(psi, ce, reg, cfg_.beta, cfg_.lambda)
                       : naive_regularized_update(psi, ce, reg, cfg_.beta, cfg_.lambda);
}

void PartialHNStrategy::train_experience(const Experience& e, int experience_index,
                                         const StepLogger& log) {
  if (e.train.size() == 0)
    throw ContractError(kModule, "train_experience", "empty experience " +
                                                         std::to_string(experience_index));
  const int task = e.task_id;
  hn_.ensure_task(task);
  if (std::find(seen_tasks_.begin(), seen_tasks_.end(), task) == seen_tasks_.end())
    seen_tasks_.push_back(task);

  Rng order = Rng(cfg_.seed).child("phn_batches").child(static_cast<uint64_t>(experience_index));
  PlateauStop plateau;

  if (experience_index == 0) {
    for (int epoch = 0; epoch < cfg_.epochs_per_experience; ++epoch) {
      double epoch_ce = 0.0;
      int64_t steps = 0;
      for (const auto& idx : make_batches(e.train.size(), cfg_.batch_size, order)) {
        const double t0 = now_ms();
        auto [x, y] = gather(e.train, idx);
        Tape tape;
        TapeScope scope(&tape);
        WeightSet ws = hn_.generate(task);
        Tensor z = dec_.forward_prefix(x, BnMode::Train);
        Tensor logits = dec_.forward_suffix_generated(z, ws, task, BnMode::Train,
                                                      stats_for(task));
        Tensor loss = cross_entropy(logits, y);
        std::vector<Tensor> phi;
        for (const auto& n : dec_.prefix_param_names()) phi.push_back(dec_.model().params().at(n));
        std::vector<Tensor> psi = psi_list();
        std::vector<Tensor> all = phi;
        all.insert(all.end(), psi.begin(), psi.end());
        auto grads = tape.gradients(loss, all, true);
        std::vector<Tensor> gphi(grads.begin(), grads.begin() + static_cast<long>(phi.size()));
        std::vector<Tensor> gpsi(grads.begin() + static_cast<long>(phi.size()), grads.end());
        sgd_step(phi, gphi, cfg_.alpha);
        sgd_step(psi, gpsi, cfg_.beta);
        epoch_ce += loss.item();
        ++steps;
        log({global_step_++, experience_index, loss.item(), 0.0, 0.0, now_ms() - t0});
      }
      if (cfg_.early_stop && steps > 0 && plateau.update(epoch_ce / static_cast<double>(steps)))
        break;
    }
    dec_.freeze();
  } else {
    if (!snapshot_)
      throw ContractError(kModule, "train_experience", "missing snapshot before experience " +
                                                           std::to_string(experience_index));
    for (int epoch = 0; epoch < cfg_.epochs_per_experience; ++epoch) {
      double epoch_ce = 0.0;
      int64_t steps = 0;
      for (const auto& idx : make_batches(e.train.size(), cfg_.batch_size, order)) {
        const double t0 = now_ms();
        auto [x, y] = gather(e.train, idx);
        UpdateReport rep = regularized_step(x, y, task, cfg_.lookahead);
        epoch_ce += rep.loss_ce;
        ++steps;
        log({global_step_++, experience_index, rep.loss_ce, rep.loss_h, rep.cosine,
             now_ms() - t0});
      }
      if (cfg_.early_stop && steps > 0 && plateau.update(epoch_ce / static_cast<double>(steps)))
        break;
    }
  }

  // Boundary: store the converged hypernetwork and its per-task statistics.
  snapshot_ = hn_.snapshot();
  snapshot_stats_ = task_stats_;
  snapshot_ws_.clear();
}

double PartialHNStrategy::evaluate_task(const Experience& e, int task_id) {
  if (!hn_.knows_task(task_id))
    throw ContractError(kModule, "evaluate", "task " + std::to_string(task_id) + " never seen");
  NoGradScope no_grad;
  WeightSet ws = hn_.generate(task_id);
  const bool is_current = !seen_tasks_.empty() && seen_tasks_.back() == task_id;
  StatsStore& stats = (!is_current && snapshot_stats_.count(task_id))
                          ? snapshot_stats_[task_id]
                          : task_stats_[task_id];
  return accuracy_over(e.test, [&](const Tensor& x) {
    Tensor z = dec_.forward_prefix(x, BnMode::Eval);
    return dec_.forward_suffix_generated(z, ws, task_id, BnMode::Eval, stats);
  });
}

void PartialHNStrategy::save_checkpoints(const std::string& dir) const {
  Checkpoint model_ck;
  model_ck.header["nf"] = std::to_string(dec_.model().nf());
  model_ck.header["k"] = std::to_string(dec_.freeze_depth());
  model_ck.header["frozen_hash"] = std::to_string(dec_.frozen_hash());
  for (const auto& [name, t] : dec_.model().params()) model_ck.tensors.emplace(name, t);
  model_ck.save(dir + "/model.ckpt");

  Checkpoint hn_ck;
  hn_ck.header["kind"] = "hypernet";
  hn_ck.header["k"] = std::to_string(dec_.freeze_depth());
  hn_.fill_checkpoint(hn_ck);
  hn_ck.save(dir + "/hypernet.ckpt");
}

// ---------------------------------------------------------------------------
// Latent replay strategy
// ---------------------------------------------------------------------------

LatentReplayStrategy::LatentReplayStrategy(DecomposedModel dec, TrainConfig cfg)
    : dec_(std::move(dec)), buffer_(cfg.buffer_capacity, cfg.seed), cfg_(cfg) {
  cfg_.validate();
  if (dec_.model().classifier_kind() != MainModel::ClassifierKind::MultiHead)
    throw ConfigError("strategies: latent-replay requires the multi-head classifier");
}

void LatentReplayStrategy::train_step(const Tensor& x, const std::vector<int>& labels,
                                      int task_id, bool first_exp, StepRecord& rec) {
  Tape tape;
  TapeScope scope(&tape);
  Tensor z = dec_.forward_prefix(x, BnMode::Train);
  const int64_t b_cur = x.dim(0);

  // Replayed latents join the current batch at the cut layer and share the
  // suffix pass (and its batch statistics), grouped by task so each group's
  // rows stay contiguous for head routing.
  std::vector<std::pair<int, std::vector<const ReplayBuffer::Entry*>>> groups;
  int64_t m = 0;
  if (!first_exp && cfg_.replay_coefficient > 0.0 && !buffer_.empty()) {
    auto entries = buffer_.sample(cfg_.batch_size);
    std::map<int, std::vector<const ReplayBuffer::Entry*>> gmap;
    for (const auto* e : entries) gmap[e->task_id].push_back(e);
    groups.assign(gmap.begin(), gmap.end());
    m = static_cast<int64_t>(entries.size());
  }

  Tensor z_all = z;
  if (m > 0) {
    const Shape want = dec_.model().latent_shape(dec_.freeze_depth(), x.dim(2), x.dim(3));
    Shape shape = want;
    shape.insert(shape.begin(), m);
    std::vector<double> vals;
    vals.reserve(static_cast<size_t>(numel(shape)));
    for (const auto& [gtask, list] : groups)
      for (const auto* e : list) {
        if (!same_shape(e->latent.shape(), want))
          throw ContractError(kModule, "latent_replay_step",
                              "stored latent shape " + shape_str(e->latent.shape()) +
                                  " does not match depth " +
                                  std::to_string(dec_.freeze_depth()));
        vals.insert(vals.end(), e->latent.values().begin(), e->latent.values().end());
      }
    z_all = concat_rows(z, Tensor(std::move(shape), std::move(vals)));
  }

  Tensor feats = dec_.forward_suffix_features_own(z_all, BnMode::Train);
  const int64_t width = feats.dim(1);
  Tensor feats_cur = reshape(slice_flat(feats, 0, b_cur * width), {b_cur, width});
  Tensor loss_current = cross_entropy(dec_.classify_own(feats_cur, task_id), labels);
  Tensor total = loss_current;

  if (m > 0) {
    Tensor replay_ce = Tensor::zeros({1});
    int64_t off = b_cur;
    for (const auto& [gtask, list] : groups) {
      const int64_t n_g = static_cast<int64_t>(list.size());
      Tensor fg = reshape(slice_flat(feats, off * width, n_g * width), {n_g, width});
      std::vector<int> glabels;
      for (const auto* e : list) glabels.push_back(e->label);
      replay_ce = add(replay_ce, scale(cross_entropy(dec_.classify_own(fg, gtask), glabels),
                                       static_cast<double>(n_g) / static_cast<double>(m)));
      off += n_g;
    }
    rec.loss_h = replay_ce.item();
    total = add(total, scale(replay_ce, cfg_.replay_coefficient));
  }

  std::vector<Tensor> params;
  const auto names = first_exp
                         ? dec_.model().param_names()
                         : dec_.suffix_param_names();
  for (const auto& n : names) {
    Tensor& t = dec_.model().params().at(n);
    if (t.requires_grad()) params.push_back(t);
  }
  auto grads = tape.gradients(total, params, true);
  sgd_step(params, grads, cfg_.alpha);
  rec.loss_ce = loss_current.item();

  // Buffer update after the step: store this batch's latents.
  {
    NoGradScope no_grad;
    for (int64_t i = 0; i < x.dim(0); ++i)
      buffer_.insert(slice_sample(z, i), labels[static_cast<size_t>(i)], task_id);
  }
}

std::array<double, 3> LatentReplayStrategy::step_losses(const Tensor& x,
                                                        const std::vector<int>& labels,
                                                        int task_id) {
  NoGradScope no_grad;
  Tensor z = dec_.forward_prefix(x, BnMode::Eval);
  const double current = cross_entropy(dec_.forward_suffix_own(z, task_id, BnMode::Eval), labels)
                             .item();
  double replay = 0.0;
  if (cfg_.replay_coefficient > 0.0 && !buffer_.empty()) {
    auto entries = buffer_.sample(cfg_.batch_size);
    std::map<int, std::vector<const ReplayBuffer::Entry*>> groups;
    for (const auto* e : entries) groups[e->task_id].push_back(e);
    for (const auto& [gtask, list] : groups) {
      Shape shape = list.front()->latent.shape();
      shape.insert(shape.begin(), static_cast<int64_t>(list.size()));
      std::vector<double> vals;
      std::vector<int> glabels;
      for (const auto* e : list) {
        vals.insert(vals.end(), e->latent.values().begin(), e->latent.values().end());
        glabels.push_back(e->label);
      }
      Tensor zg(std::move(shape), std::move(vals));
      replay += cross_entropy(dec_.forward_suffix_own(zg, gtask, BnMode::Eval), glabels).item() *
                static_cast<double>(list.size()) / static_cast<double>(entries.size());
    }
  }
  return {current + cfg_.replay_coefficient * replay, current, replay};
}

void LatentReplayStrategy::train_experience(const Experience& e, int experience_index,
                                            const StepLogger& log) {
  if (e.train.size() == 0)
    throw ContractError(kModule, "train_experience", "empty experience " +
                                                         std::to_string(experience_index));
  const int task = e.task_id;
  dec_.model().ensure_head(task);
  if (std::find(seen_tasks_.begin(), seen_tasks_.end(), task) == seen_tasks_.end())
    seen_tasks_.push_back(task);

  Rng order = Rng(cfg_.seed).child("lr_batches").child(static_cast<uint64_t>(experience_index));
  PlateauStop plateau;
  const bool first = experience_index == 0;
  for (int epoch = 0; epoch < cfg_.epochs_per_experience; ++epoch) {
    double epoch_ce = 0.0;
    int64_t steps = 0;
    for (const auto& idx : make_batches(e.train.size(), cfg_.batch_size, order)) {
      const double t0 = now_ms();
      auto [x, y] = gather(e.train, idx);
      StepRecord rec{global_step_++, experience_index, 0.0, 0.0, 0.0, 0.0};
      train_step(x, y, task, first, rec);
      rec.wall_ms = now_ms() - t0;
      epoch_ce += rec.loss_ce;
      ++steps;
      log(rec);
    }
    if (cfg_.early_stop && steps > 0 && plateau.update(epoch_ce / static_cast<double>(steps)))
      break;
  }
  if (first) dec_.freeze();
}

double LatentReplayStrategy::evaluate_task(const Experience& e, int task_id) {
  NoGradScope no_grad;
  return accuracy_over(e.test, [&](const Tensor& x) {
    Tensor z = dec_.forward_prefix(x, BnMode::Eval);
    return dec_.forward_suffix_own(z, task_id, BnMode::Eval);
  });
}

void LatentReplayStrategy::save_checkpoints(const std::string& dir) const {
  Checkpoint ck;
  ck.header["nf"] = std::to_string(dec_.model().nf());
  ck.header["k"] = std::to_string(dec_.freeze_depth());
  ck.header["frozen_hash"] = std::to_string(dec_.frozen_hash());
  for (const auto& [name, t] : dec_.model().params()) ck.tensors.emplace(name, t);
  ck.save(dir + "/model.ckpt");
}

// ---------------------------------------------------------------------------
// Naive strategy
// ---------------------------------------------------------------------------

NaiveStrategy::NaiveStrategy(MainModel model, TrainConfig cfg)
    : model_(std::move(model)), cfg_(cfg) {
  cfg_.validate();
  if (model_.classifier_kind() != MainModel::ClassifierKind::MultiHead)
    throw ConfigError("strategies: naive requires the multi-head classifier");
}

void NaiveStrategy::train_experience(const Experience& e, int experience_index,
                                     const StepLogger& log) {
  if (e.train.size() == 0)
    throw ContractError(kModule, "train_experience", "empty experience " +
                                                         std::to_string(experience_index));
  const int task = e.task_id;
  model_.ensure_head(task);
  Rng order =
      Rng(cfg_.seed).child("naive_batches").child(static_cast<uint64_t>(experience_index));
  PlateauStop plateau;
  for (int epoch = 0; epoch < cfg_.epochs_per_experience; ++epoch) {
    double epoch_ce = 0.0;
    int64_t steps = 0;
    for (const auto& idx : make_batches(e.train.size(), cfg_.batch_size, order)) {
      const double t0 = now_ms();
      auto [x, y] = gather(e.train, idx);
      Tape tape;
      TapeScope scope(&tape);
      Tensor loss = cross_entropy(model_.forward(x, BnMode::Train, task), y);
      std::vector<Tensor> params;
      for (const auto& n : model_.param_names()) params.push_back(model_.params().at(n));
      auto grads = tape.gradients(loss, params, true);
      sgd_step(params, grads, cfg_.alpha);
      epoch_ce += loss.item();
      ++steps;
      log({global_step_++, experience_index, loss.item(), 0.0, 0.0, now_ms() - t0});
    }
    if (cfg_.early_stop && steps > 0 && plateau.update(epoch_ce / static_cast<double>(steps)))
      break;
  }
}

double NaiveStrategy::evaluate_task(const Experience& e, int task_id) {
  NoGradScope no_grad;
  return accuracy_over(e.test,
                       [&](const Tensor& x) { return model_.forward(x, BnMode::Eval, task_id); });
}

void NaiveStrategy::save_checkpoints(const std::string& dir) const {
  Checkpoint ck;
  ck.header["nf"] = std::to_string(model_.nf());
  for (const auto& [name, t] : model_.params()) ck.tensors.emplace(name, t);
  ck.save(dir + "/model.ckpt");
}

}  // namespace phn
