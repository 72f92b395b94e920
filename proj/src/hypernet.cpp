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

#include "hypernet.hpp"

#include <cmath>

namespace phn {

namespace {
constexpr const char* kModule = "hypernet";

// Output gain of the trunk. Keeping the conditioning vector near the same
// RMS as the lookup rows (1/sqrt(3d) ~ 0.2) balances the generation
// Jacobian between head weights and head inputs, which sets the stable
// learning-rate range of the regularized updates.
constexpr double kCondGain = 0.2;

std::string embed_key(int task_id) { return "embed.task" + std::to_string(task_id); }
}  // namespace

int64_t conv_head_param_count(int64_t a, int64_t b, int64_t k, int64_t h_out, int64_t d) {
  if (d < 1) throw ContractError(kModule, "conv_head_param_count", "d must be >= 1");
  if (k < 1) throw ContractError(kModule, "conv_head_param_count", "k must be >= 1");
  return d * a + (h_out + d) * b * k * k;
}

int64_t hypernet_param_count(const std::vector<ModuleSpec>& targets, const HyperConfig& cfg,
                             int num_tasks) {
  int64_t n = static_cast<int64_t>(num_tasks) * cfg.embed_dim;
  n += cfg.embed_dim * cfg.hidden1 + cfg.hidden1;
  n += cfg.hidden1 * cfg.hidden2 + cfg.hidden2;
  n += cfg.hidden2 * cfg.h_out + cfg.h_out;
  for (const ModuleSpec& m : targets) {
    switch (m.kind) {
      case ModuleSpec::Kind::Conv:
        n += conv_head_param_count(m.in_c, m.out_c, m.k, cfg.h_out, cfg.lookup_dim);
        break;
      case ModuleSpec::Kind::BatchNorm:
        n += 2 * m.out_c * cfg.h_out;
        break;
      case ModuleSpec::Kind::Linear:
        n += (m.out_c * m.in_c + m.out_c) * cfg.h_out;
        break;
    }
  }
  return n;
}

Hypernet::Hypernet(std::vector<ModuleSpec> targets, HyperConfig cfg, uint64_t seed)
    : cfg_(cfg), seed_(seed), targets_(std::move(targets)) {
  if (targets_.empty())
    throw ConfigError("hypernet: no target slot manifest registered");
  if (cfg_.lookup_dim < 1) throw ConfigError("hypernet: lookup_dim must be >= 1");
  init_params();
}

void Hypernet::init_params() {
  Rng root(seed_);
  auto init_linear = [&](const std::string& name, int64_t out, int64_t in) {
    Rng rng = root.child(name);
    params_.emplace(name + ".weight", Tensor::kaiming_uniform({out, in}, rng, in, true));
    params_.emplace(name + ".bias", Tensor::zeros({out}, true));
  };
  init_linear("trunk.fc1", cfg_.hidden1, cfg_.embed_dim);
  init_linear("trunk.fc2", cfg_.hidden2, cfg_.hidden1);
  init_linear("trunk.fc3", cfg_.h_out, cfg_.hidden2);

  for (const ModuleSpec& m : targets_) {
    Rng rng = root.child("head." + m.name);
    switch (m.kind) {
      case ModuleSpec::Kind::Conv: {
        const double lb = 1.0 / std::sqrt(static_cast<double>(cfg_.lookup_dim));
        params_.emplace("head." + m.name + ".lookup",
                        Tensor::uniform({m.in_c, cfg_.lookup_dim}, rng, -lb, lb, true));
        // Head inputs have RMS ~ kCondGain, so this bound puts generated
        // kernels near the fan-in init of the target layer.
        const double target_std = std::sqrt(2.0 / static_cast<double>(m.in_c * m.k * m.k));
        const double wb = std::sqrt(3.0) * target_std /
                          (std::sqrt(static_cast<double>(cfg_.h_out + cfg_.lookup_dim)) * kCondGain);
        params_.emplace("head." + m.name + ".weight",
                        Tensor::uniform({m.out_c * m.k * m.k, cfg_.h_out + cfg_.lookup_dim}, rng,
                                        -wb, wb, true));
        break;
      }
      case ModuleSpec::Kind::BatchNorm: {
        // Small raw outputs: gamma = 1 + raw stays near 1, beta near 0.
        params_.emplace("head." + m.name + ".weight",
                        Tensor::uniform({2 * m.out_c, cfg_.h_out}, rng, -0.05, 0.05, true));
        break;
      }
      case ModuleSpec::Kind::Linear: {
        const double target_std = std::sqrt(2.0 / static_cast<double>(m.in_c));
        const double wb = std::sqrt(3.0) * target_std /
                          (std::sqrt(static_cast<double>(cfg_.h_out)) * kCondGain);
        params_.emplace("head." + m.name + ".weight",
                        Tensor::uniform({m.out_c * m.in_c + m.out_c, cfg_.h_out}, rng, -wb, wb,
                                        true));
        break;
      }
    }
  }
}

bool Hypernet::knows_task(int task_id) const { return params_.count(embed_key(task_id)) > 0; }

void Hypernet::ensure_task(int task_id) {
  if (knows_task(task_id)) return;
  Rng rng = Rng(seed_).child("embed").child(static_cast<uint64_t>(task_id));
  params_.emplace(embed_key(task_id),
                  Tensor::uniform({1, cfg_.embed_dim}, rng, -1.0, 1.0, true));
}

WeightSet Hypernet::generate(int task_id) {
  ensure_task(task_id);
  return generate_using(params_, task_id);
}

WeightSet Hypernet::generate_using(const std::map<std::string, Tensor>& params,
                                   int task_id) const {
  auto at = [&](const std::string& key) -> const Tensor& {
    auto it = params.find(key);
    if (it == params.end())
      throw ContractError(kModule, "generate", "missing parameter " + key);
    return it->second;
  };

  const Tensor& emb = at(embed_key(task_id));
  Tensor h = relu(linear(emb, at("trunk.fc1.weight"), at("trunk.fc1.bias")));
  h = relu(linear(h, at("trunk.fc2.weight"), at("trunk.fc2.bias")));
  h = scale(linear(h, at("trunk.fc3.weight"), at("trunk.fc3.bias")), kCondGain);  // [1, h_out]

  WeightSet ws;
  for (const ModuleSpec& m : targets_) {
    switch (m.kind) {
      case ModuleSpec::Kind::Conv: {
        const Tensor& lookup = at("head." + m.name + ".lookup");  // [a, d]
        const Tensor& w = at("head." + m.name + ".weight");       // [b*k*k, h+d]
        Tensor rows = concat_cols(repeat_row(h, m.in_c), lookup);  // [a, h+d]
        Tensor raw = linear(rows, w, Tensor());                    // [a, b*k*k]
        Tensor kernel = permute(reshape(raw, {m.in_c, m.out_c, m.k, m.k}), {1, 0, 2, 3});
        ws.emplace(m.name + ".weight", std::move(kernel));
        break;
      }
      case ModuleSpec::Kind::BatchNorm: {
        const Tensor& w = at("head." + m.name + ".weight");  // [2C, h]
        Tensor flat = reshape(linear(h, w, Tensor()), {2 * m.out_c});
        Tensor gamma = add(slice_flat(flat, 0, m.out_c), Tensor::full({m.out_c}, 1.0));
        Tensor beta = slice_flat(flat, m.out_c, m.out_c);
        ws.emplace(m.name + ".gamma", std::move(gamma));
        ws.emplace(m.name + ".beta", std::move(beta));
        break;
      }
      case ModuleSpec::Kind::Linear: {
        const Tensor& w = at("head." + m.name + ".weight");  // [out*in+out, h]
        Tensor flat = reshape(linear(h, w, Tensor()), {m.out_c * m.in_c + m.out_c});
        Tensor weight = reshape(slice_flat(flat, 0, m.out_c * m.in_c), {m.out_c, m.in_c});
        Tensor bias = slice_flat(flat, m.out_c * m.in_c, m.out_c);
        ws.emplace(m.name + ".weight", std::move(weight));
        ws.emplace(m.name + ".bias", std::move(bias));
        break;
      }
    }
  }
  return ws;
}

std::vector<Tensor> Hypernet::param_list() {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (auto& [name, t] : params_) out.push_back(t);
  return out;
}

int64_t Hypernet::param_count() const {
  int64_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

Hypernet Hypernet::snapshot() const {
  Hypernet copy(targets_, cfg_, seed_);
  copy.params_.clear();
  for (const auto& [name, t] : params_) copy.params_.emplace(name, t.clone());
  return copy;
}

void Hypernet::fill_checkpoint(Checkpoint& ck) const {
  for (const auto& [name, t] : params_) ck.tensors.emplace(name, t);
  for (const ModuleSpec& m : targets_)
    for (const auto& e : m.param_entries()) ck.manifest.push_back(e);
}

void Hypernet::load_from_checkpoint(const Checkpoint& ck) {
  params_.clear();
  for (const auto& [name, t] : ck.tensors) {
    Tensor v = t.clone();
    v.set_requires_grad(true);
    params_.emplace(name, std::move(v));
  }
}

std::vector<CompressionRow> compression_rows(const std::vector<ModuleSpec>& targets,
                                             HyperConfig cfg, const std::vector<int64_t>& ds,
                                             int num_tasks) {
  std::vector<CompressionRow> rows;
  if (ds.empty()) return rows;
  HyperConfig anchor_cfg = cfg;
  anchor_cfg.lookup_dim = ds.back();
  const int64_t anchor = hypernet_param_count(targets, anchor_cfg, num_tasks);
  for (int64_t d : ds) {
    HyperConfig c = cfg;
    c.lookup_dim = d;
    const int64_t total = hypernet_param_count(targets, c, num_tasks);
    rows.push_back({d, total,
                    100.0 * (1.0 - static_cast<double>(total) / static_cast<double>(anchor))});
  }
  return rows;
}

}  // namespace phn
