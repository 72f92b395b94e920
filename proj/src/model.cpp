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

#include "model.hpp"

#include <algorithm>

namespace phn {

namespace {
constexpr const char* kModule = "models";
}

int64_t ModuleSpec::param_count() const {
  switch (kind) {
    case Kind::Conv: return in_c * out_c * k * k;
    case Kind::BatchNorm: return 2 * out_c;
    case Kind::Linear: return out_c * in_c + out_c;
  }
  return 0;
}

std::vector<std::pair<std::string, Shape>> ModuleSpec::param_entries() const {
  switch (kind) {
    case Kind::Conv:
      return {{name + ".weight", Shape{out_c, in_c, k, k}}};
    case Kind::BatchNorm:
      return {{name + ".gamma", Shape{out_c}}, {name + ".beta", Shape{out_c}}};
    case Kind::Linear:
      return {{name + ".weight", Shape{out_c, in_c}}, {name + ".bias", Shape{out_c}}};
  }
  return {};
}

const Tensor& WeightSource::get(const std::string& name) const {
  if (overlay_) {
    auto it = overlay_->find(name);
    if (it != overlay_->end()) return it->second;
  }
  auto it = base_->find(name);
  if (it == base_->end())
    throw ContractError(kModule, "forward", "unknown parameter name: " + name);
  return it->second;
}

MainModel::MainModel(int num_classes_per_task, int nf, ClassifierKind kind, uint64_t seed,
                     int in_channels)
    : num_classes_(num_classes_per_task),
      nf_(nf),
      in_channels_(in_channels),
      kind_(kind),
      seed_(seed) {
  if (nf < 1) throw ContractError(kModule, "build_slim_resnet", "nf must be >= 1");
  if (num_classes_per_task < 2)
    throw ContractError(kModule, "build_slim_resnet", "need at least 2 classes per task");
  build_modules();
  init_params(seed);
}

void MainModel::build_modules() {
  auto conv = [&](std::string name, int seg, int64_t a, int64_t b, int64_t k, int s, int p) {
    modules_.push_back({ModuleSpec::Kind::Conv, std::move(name), seg, a, b, k, s, p});
  };
  auto bn = [&](std::string name, int seg, int64_t c) {
    modules_.push_back({ModuleSpec::Kind::BatchNorm, std::move(name), seg, c, c, 0, 1, 0});
  };

  conv("conv1", 0, in_channels_, nf_, 3, 1, 1);
  bn("bn1", 0, nf_);

  int64_t in_c = nf_;
  for (int s = 1; s <= 4; ++s) {
    const int64_t out_c = static_cast<int64_t>(nf_) << (s - 1);
    for (int b = 0; b < 2; ++b) {
      const int stride = (s > 1 && b == 0) ? 2 : 1;
      const std::string p = "layer" + std::to_string(s) + "." + std::to_string(b) + ".";
      conv(p + "conv1", s, in_c, out_c, 3, stride, 1);
      bn(p + "bn1", s, out_c);
      conv(p + "conv2", s, out_c, out_c, 3, 1, 1);
      bn(p + "bn2", s, out_c);
      if (stride != 1 || in_c != out_c) {
        conv(p + "downsample.conv", s, in_c, out_c, 1, stride, 0);
        bn(p + "downsample.bn", s, out_c);
      }
      in_c = out_c;
    }
  }

  if (kind_ == ClassifierKind::Single)
    modules_.push_back({ModuleSpec::Kind::Linear, "classifier", 5, static_cast<int64_t>(nf_) * 8,
                        num_classes_, 0, 1, 0});
  // MultiHead classifier modules are added per task by ensure_head.
}

void MainModel::init_params(uint64_t seed) {
  Rng root(seed);
  for (const ModuleSpec& m : modules_) {
    Rng rng = root.child(m.name);
    switch (m.kind) {
      case ModuleSpec::Kind::Conv: {
        params_.emplace(m.name + ".weight",
                        Tensor::kaiming_uniform({m.out_c, m.in_c, m.k, m.k}, rng,
                                                m.in_c * m.k * m.k, true));
        break;
      }
      case ModuleSpec::Kind::BatchNorm: {
        params_.emplace(m.name + ".gamma", Tensor::full({m.out_c}, 1.0, true));
        params_.emplace(m.name + ".beta", Tensor::zeros({m.out_c}, true));
        RunningStats st;
        st.reset(m.out_c);
        stats_.emplace(m.name, std::move(st));
        break;
      }
      case ModuleSpec::Kind::Linear: {
        params_.emplace(m.name + ".weight",
                        Tensor::kaiming_uniform({m.out_c, m.in_c}, rng, m.in_c, true));
        params_.emplace(m.name + ".bias", Tensor::zeros({m.out_c}, true));
        break;
      }
    }
  }
}

int64_t MainModel::total_param_count() const {
  int64_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

std::vector<std::string> MainModel::param_names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, t] : params_) out.push_back(name);
  return out;
}

bool MainModel::has_head(int task_id) const {
  return params_.count("classifier.task" + std::to_string(task_id) + ".weight") > 0;
}

void MainModel::ensure_head(int task_id) {
  if (kind_ != ClassifierKind::MultiHead)
    throw ContractError(kModule, "ensure_head", "model does not use a multi-head classifier");
  if (has_head(task_id)) return;
  const std::string name = "classifier.task" + std::to_string(task_id);
  modules_.push_back({ModuleSpec::Kind::Linear, name, 5, static_cast<int64_t>(nf_) * 8,
                      num_classes_, 0, 1, 0});
  Rng rng = Rng(seed_).child("head").child(static_cast<uint64_t>(task_id));
  params_.emplace(name + ".weight",
                  Tensor::kaiming_uniform({num_classes_, static_cast<int64_t>(nf_) * 8}, rng,
                                          static_cast<int64_t>(nf_) * 8, true));
  params_.emplace(name + ".bias", Tensor::zeros({num_classes_}, true));
}

Tensor MainModel::run_block(const Tensor& x, const std::string& p, bool has_down, BnMode mode,
                            const WeightSource& w, StatsStore& stats) const {
  auto bn_at = [&](const Tensor& t, const std::string& site) {
    auto it = stats.find(site);
    if (it == stats.end()) it = stats.emplace(site, RunningStats{}).first;
    return batch_norm(t, w.get(site + ".gamma"), w.get(site + ".beta"), it->second, mode);
  };

  const ModuleSpec* c1 = nullptr;
  for (const ModuleSpec& m : modules_)
    if (m.name == p + "conv1") { c1 = &m; break; }
  if (!c1) throw ContractError(kModule, "forward", "unknown block " + p);

  Tensor h = bn_at(conv2d(x, w.get(p + "conv1.weight"), c1->stride, c1->padding), p + "bn1");
  h = relu(h);
  h = bn_at(conv2d(h, w.get(p + "conv2.weight"), 1, 1), p + "bn2");
  Tensor shortcut = x;
  if (has_down)
    shortcut = bn_at(conv2d(x, w.get(p + "downsample.conv.weight"), c1->stride, 0),
                     p + "downsample.bn");
  return relu(add(h, shortcut));
}

Tensor MainModel::forward_range(const Tensor& x, int from, int to, BnMode mode,
                                const WeightSource& w, StatsStore& stats, int task_id) const {
  Tensor h = x;
  for (int seg = from; seg < to; ++seg) {
    if (seg == 0) {
      auto it = stats.find("bn1");
      if (it == stats.end()) it = stats.emplace("bn1", RunningStats{}).first;
      h = relu(batch_norm(conv2d(h, w.get("conv1.weight"), 1, 1), w.get("bn1.gamma"),
                          w.get("bn1.beta"), it->second, mode));
    } else if (seg <= 4) {
      for (int b = 0; b < 2; ++b) {
        const std::string p = "layer" + std::to_string(seg) + "." + std::to_string(b) + ".";
        bool has_down = false;
        for (const ModuleSpec& m : modules_)
          if (m.name == p + "downsample.conv") { has_down = true; break; }
        h = run_block(h, p, has_down, mode, w, stats);
      }
    } else {
      h = classify(flatten2(avg_pool2d(h, static_cast<int>(h.dim(2)))), w, task_id);
    }
  }
  return h;
}

Tensor MainModel::features_range(const Tensor& x, int from, BnMode mode, const WeightSource& w,
                                 StatsStore& stats) const {
  Tensor h = forward_range(x, from, 5, mode, w, stats, /*task_id=*/0);
  return flatten2(avg_pool2d(h, static_cast<int>(h.dim(2))));
}

Tensor MainModel::classify(const Tensor& features, const WeightSource& w, int task_id) const {
  const std::string cname = kind_ == ClassifierKind::Single
                                ? std::string("classifier")
                                : "classifier.task" + std::to_string(task_id);
  return linear(features, w.get(cname + ".weight"), w.get(cname + ".bias"));
}

Tensor MainModel::forward(const Tensor& x, BnMode mode, int task_id) {
  return forward_range(x, 0, 6, mode, WeightSource(params_), stats_, task_id);
}

std::vector<std::string> MainModel::segment_param_names(int from, int to) const {
  std::vector<std::string> out;
  for (const ModuleSpec& m : modules_) {
    const int seg = m.segment;
    if (seg < from || seg >= to) continue;
    for (auto& [name, shape] : m.param_entries()) out.push_back(name);
  }
  return out;
}

Shape MainModel::latent_shape(int k, int64_t in_h, int64_t in_w) const {
  if (k < 0 || k > 4) throw ContractError(kModule, "latent_shape", "k must be in [0,4]");
  if (k == 0) return {in_channels_, in_h, in_w};
  const int64_t c = static_cast<int64_t>(nf_) << (k - 1);
  const int64_t div = k >= 2 ? (1ll << (k - 1)) : 1;
  return {c, in_h / div, in_w / div};
}

DecomposedModel::DecomposedModel(MainModel model, int k) : model_(std::move(model)), k_(k) {
  if (k < 0 || k > 4)
    throw ContractError(kModule, "decompose", "freeze depth must be in [0,4], got " +
                                                   std::to_string(k));
}

std::vector<std::string> DecomposedModel::prefix_param_names() const {
  if (k_ == 0) return {};
  return model_.segment_param_names(0, k_ + 1);
}

std::vector<std::string> DecomposedModel::suffix_param_names() const {
  return model_.segment_param_names(k_ == 0 ? 0 : k_ + 1, 6);
}

std::vector<std::pair<std::string, Shape>> DecomposedModel::suffix_slots() const {
  std::vector<std::pair<std::string, Shape>> out;
  const int from = k_ == 0 ? 0 : k_ + 1;
  for (const ModuleSpec& m : model_.modules()) {
    if (m.segment < from) continue;
    for (auto& e : m.param_entries()) out.push_back(e);
  }
  return out;
}

Tensor DecomposedModel::forward_prefix(const Tensor& x, BnMode mode) {
  if (k_ == 0) return x;
  const BnMode m = frozen_ ? BnMode::Eval : mode;
  return model_.forward_range(x, 0, k_ + 1, m, WeightSource(model_.params()), model_.stats(),
                              /*task_id=*/0);
}

Tensor DecomposedModel::forward_suffix_generated(const Tensor& z, const WeightSet& weights,
                                                 int task_id, BnMode mode,
                                                 StatsStore& suffix_stats) const {
  // Generated batch-norm slots carry no state, so gamma/beta come from the
  // weight set while running statistics live in the caller's store.
  auto slots = suffix_slots();
  std::string missing, extra;
  for (const auto& [name, shape] : slots)
    if (!weights.count(name)) missing += (missing.empty() ? "" : ", ") + name;
  if (weights.size() != slots.size() || !missing.empty()) {
    for (const auto& [name, t] : weights) {
      bool known = false;
      for (const auto& [sname, shape] : slots) known = known || sname == name;
      if (!known) extra += (extra.empty() ? "" : ", ") + name;
    }
    if (!missing.empty() || !extra.empty())
      throw ContractError(kModule, "forward_decomposed",
                          "weight-set mismatch; missing: [" + missing + "] extra: [" + extra +
                              "]");
  }
  for (const auto& [name, shape] : slots) {
    const Tensor& t = weights.at(name);
    if (!same_shape(t.shape(), shape))
      throw ContractError(kModule, "forward_decomposed",
                          "slot " + name + " has shape " + shape_str(t.shape()) + ", expected " +
                              shape_str(shape));
  }
  const int from = k_ == 0 ? 0 : k_ + 1;
  return model_.forward_range(z, from, 6, mode, WeightSource(model_.params(), weights),
                              suffix_stats, task_id);
}

Tensor DecomposedModel::forward_suffix_own(const Tensor& z, int task_id, BnMode mode) {
  const int from = k_ == 0 ? 0 : k_ + 1;
  return model_.forward_range(z, from, 6, mode, WeightSource(model_.params()), model_.stats(),
                              task_id);
}

Tensor DecomposedModel::forward_suffix_features_own(const Tensor& z, BnMode mode) {
  const int from = k_ == 0 ? 0 : k_ + 1;
  return model_.features_range(z, from, mode, WeightSource(model_.params()), model_.stats());
}

Tensor DecomposedModel::classify_own(const Tensor& features, int task_id) {
  return model_.classify(features, WeightSource(model_.params()), task_id);
}

Tensor DecomposedModel::forward_generated(const Tensor& x, const WeightSet& weights, int task_id,
                                          BnMode mode, StatsStore& suffix_stats) {
  return forward_suffix_generated(forward_prefix(x, mode), weights, task_id, mode, suffix_stats);
}

void DecomposedModel::freeze() {
  if (frozen_) throw ContractError(kModule, "freeze", "model is already frozen");
  frozen_hash_ = prefix_hash();
  for (const std::string& name : prefix_param_names())
    model_.params().at(name).set_requires_grad(false);
  frozen_ = true;
}

uint64_t DecomposedModel::prefix_hash() const {
  uint64_t h = 0xCBF29CE484222325ull;
  for (const std::string& name : prefix_param_names())
    h = hash_tensor_bytes(model_.params().at(name), h);
  return h;
}

MainModel build_slim_resnet(int num_classes_per_task, int nf, MainModel::ClassifierKind kind,
                            uint64_t seed, int in_channels) {
  return MainModel(num_classes_per_task, nf, kind, seed, in_channels);
}

DecomposedModel decompose(MainModel model, int k) { return DecomposedModel(std::move(model), k); }

}  // namespace phn
