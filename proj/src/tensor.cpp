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

#include "tensor.hpp"

#include <cmath>

namespace phn {

namespace {
thread_local Precision g_precision = Precision::F32;
}

Precision active_precision() { return g_precision; }

PrecisionGuard::PrecisionGuard(Precision p) : prev_(g_precision) { g_precision = p; }
PrecisionGuard::~PrecisionGuard() { g_precision = prev_; }

int64_t numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

bool same_shape(const Shape& a, const Shape& b) { return a == b; }

double quantize_value(double v) {
  if (g_precision == Precision::F32) return static_cast<double>(static_cast<float>(v));
  return v;
}

void quantize(std::span<double> vals) {
  if (g_precision != Precision::F32) return;
  for (double& v : vals) v = static_cast<double>(static_cast<float>(v));
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
    : shape_(std::move(shape)),
      data_(std::make_shared<std::vector<double>>(std::move(values))),
      requires_grad_(requires_grad) {
  if (numel(shape_) != static_cast<int64_t>(data_->size()))
    throw ContractError("numerics", "tensor",
                        "shape " + shape_str(shape_) + " does not match data length " +
                            std::to_string(data_->size()));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::vector<double> v(static_cast<size_t>(numel(shape)), 0.0);
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  std::vector<double> v(static_cast<size_t>(numel(shape)), quantize_value(value));
  return Tensor(std::move(shape), std::move(v), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({1}, {quantize_value(value)}, requires_grad);
}

Tensor Tensor::uniform(Shape shape, Rng& rng, double lo, double hi, bool requires_grad) {
  std::vector<double> v(static_cast<size_t>(numel(shape)));
  for (double& x : v) x = rng.uniform(lo, hi);
  Tensor t(std::move(shape), std::move(v), requires_grad);
  quantize(t.values());
  return t;
}

Tensor Tensor::kaiming_uniform(Shape shape, Rng& rng, int64_t fan_in, bool requires_grad) {
  const double bound = std::sqrt(3.0) * std::sqrt(2.0 / static_cast<double>(fan_in));
  return uniform(std::move(shape), rng, -bound, bound, requires_grad);
}

double Tensor::item() const {
  if (size() != 1)
    throw ContractError("numerics", "item", "expected scalar, got shape " + shape_str(shape_));
  return (*data_)[0];
}

Tensor Tensor::clone() const {
  Tensor out(shape_, std::vector<double>(data_->begin(), data_->end()), requires_grad_);
  return out;
}

void sgd_step(std::span<Tensor> params, std::span<const Tensor> grads, double lr) {
  if (params.size() != grads.size())
    throw ContractError("numerics", "sgd_step",
                        "param/grad count mismatch: " + std::to_string(params.size()) + " vs " +
                            std::to_string(grads.size()));
  if (lr < 0.0) throw ContractError("numerics", "sgd_step", "lr must be >= 0");
  if (lr == 0.0) return;  // bitwise no-op
  for (size_t i = 0; i < params.size(); ++i) {
    if (!same_shape(params[i].shape(), grads[i].shape()))
      throw ContractError("numerics", "sgd_step",
                          "shape mismatch at index " + std::to_string(i) + ": " +
                              shape_str(params[i].shape()) + " vs " + shape_str(grads[i].shape()));
    auto p = params[i].values();
    auto g = grads[i].values();
    for (size_t j = 0; j < p.size(); ++j) p[j] -= lr * g[j];
    quantize(p);
  }
}

uint64_t hash_tensor_bytes(const Tensor& t, uint64_t seed) {
  uint64_t h = seed;
  for (double d : t.values()) {
    const float f = static_cast<float>(d);
    uint32_t bits;
    static_assert(sizeof(bits) == sizeof(f));
    __builtin_memcpy(&bits, &f, sizeof(bits));
    for (int b = 0; b < 4; ++b) {
      h ^= (bits >> (8 * b)) & 0xFF;
      h *= 0x100000001B3ull;
    }
  }
  return h;
}

}  // namespace phn
