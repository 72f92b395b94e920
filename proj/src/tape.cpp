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

#include "tape.hpp"

namespace phn {

namespace {
thread_local Tape* g_tape = nullptr;
}

Tape* active_tape() { return g_tape; }

TapeScope::TapeScope(Tape* t) : prev_(g_tape) { g_tape = t; }
TapeScope::~TapeScope() { g_tape = prev_; }

std::vector<double>* GradSink::of(size_t slot) {
  if (!tracked_[slot]) return nullptr;
  const int id = ids_[slot];
  auto& buf = (*bufs_)[static_cast<size_t>(id)];
  if (!buf) buf = std::make_unique<std::vector<double>>(static_cast<size_t>(sizes_[slot]), 0.0);
  return buf.get();
}

int Tape::id_of(const Tensor& t) {
  auto it = ids_.find(t.storage_id());
  if (it != ids_.end()) return it->second;
  const int id = next_id_++;
  ids_.emplace(t.storage_id(), id);
  return id;
}

int Tape::find(const Tensor& t) const {
  auto it = ids_.find(t.storage_id());
  return it == ids_.end() ? -1 : it->second;
}

bool Tape::knows(const Tensor& t) const { return find(t) >= 0; }

void Tape::record(const Tensor& out, std::initializer_list<const Tensor*> inputs, Backward fn) {
  Record rec;
  rec.inputs.reserve(inputs.size());
  rec.tracked.reserve(inputs.size());
  rec.in_sizes.reserve(inputs.size());
  for (const Tensor* in : inputs) {
    rec.inputs.push_back(id_of(*in));
    rec.tracked.push_back(in->requires_grad() ? 1 : 0);
    rec.in_sizes.push_back(in->size());
    pinned_.push_back(*in);
  }
  rec.out = id_of(out);
  pinned_.push_back(out);
  rec.fn = std::move(fn);
  records_.push_back(std::move(rec));
}

std::vector<Tensor> Tape::gradients(const Tensor& loss, std::span<const Tensor> params,
                                    bool allow_unknown) {
  if (loss.size() != 1)
    throw ContractError("numerics", "grad",
                        "loss must be scalar, got shape " + shape_str(loss.shape()));
  const int loss_id = find(loss);
  if (loss_id < 0 && !params.empty()) {
    // A loss never recorded can still be its own parameter.
    bool self = false;
    for (const Tensor& p : params) self = self || p.storage_id() == loss.storage_id();
    if (!self && !allow_unknown)
      throw ContractError("numerics", "grad", "loss is not on the tape");
  }

  std::vector<std::unique_ptr<std::vector<double>>> bufs(static_cast<size_t>(next_id_) + 1);
  auto seed_id = loss_id >= 0 ? loss_id : id_of(loss);
  if (static_cast<size_t>(seed_id) >= bufs.size()) bufs.resize(static_cast<size_t>(seed_id) + 1);
  bufs[static_cast<size_t>(seed_id)] = std::make_unique<std::vector<double>>(1, 1.0);

  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    const auto& buf = bufs[static_cast<size_t>(it->out)];
    if (!buf) continue;  // node does not influence the loss
    GradSink sink(this, it->inputs, it->tracked, it->in_sizes, &bufs);
    it->fn(std::span<const double>(buf->data(), buf->size()), sink);
  }

  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const Tensor& p : params) {
    const int id = find(p);
    if (id < 0 && p.storage_id() != loss.storage_id()) {
      if (!allow_unknown)
        throw ContractError("numerics", "grad",
                            "parameter of shape " + shape_str(p.shape()) +
                                " is not on the tape (unreachable parameter)");
      out.push_back(Tensor::zeros(p.shape()));
      continue;
    }
    const int use_id = id >= 0 ? id : seed_id;
    const auto& buf = bufs[static_cast<size_t>(use_id)];
    Tensor g = buf ? Tensor(p.shape(), *buf) : Tensor::zeros(p.shape());
    quantize(g.values());
    out.push_back(g);
  }
  // Convenience mirror onto the param handles.
  for (size_t i = 0; i < params.size(); ++i) {
    const_cast<Tensor&>(params[i]).grad =
        std::make_shared<std::vector<double>>(out[i].values().begin(), out[i].values().end());
  }
  return out;
}

void Tape::clear() {
  records_.clear();
  ids_.clear();
  pinned_.clear();
  next_id_ = 0;
}

}  // namespace phn
