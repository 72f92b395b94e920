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

#ifndef PHN_TENSOR_HPP
#define PHN_TENSOR_HPP

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rng.hpp"

namespace phn {

/// Error thrown when an operation's contract is violated. Carries the module
/// and operation name so diagnostics can point at the failing surface.
class ContractError : public std::runtime_error {
 public:
  ContractError(std::string module, std::string op, const std::string& msg)
      : std::runtime_error(module + "." + op + ": " + msg),
        module_(std::move(module)),
        op_(std::move(op)) {}
  const std::string& module_name() const { return module_; }
  const std::string& op_name() const { return op_; }

 private:
  std::string module_, op_;
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numeric precision of the engine. Storage is always double; in F32 mode
/// every operation's results are rounded through IEEE float, so values live
/// exactly on the 32-bit grid. F64 is used by verification oracles.
enum class Precision { F32, F64 };

Precision active_precision();

class PrecisionGuard {
 public:
  explicit PrecisionGuard(Precision p);
  ~PrecisionGuard();
  PrecisionGuard(const PrecisionGuard&) = delete;
  PrecisionGuard& operator=(const PrecisionGuard&) = delete;

 private:
  Precision prev_;
};

using Shape = std::vector<int64_t>;

int64_t numel(const Shape& s);
std::string shape_str(const Shape& s);
bool same_shape(const Shape& a, const Shape& b);

/// Rounds a buffer through float when the active precision is F32.
void quantize(std::span<double> vals);
double quantize_value(double v);

/// N-dimensional array handle. Copies share storage; ops produce fresh
/// tensors. `grad` is populated by Tape::gradients as a convenience and is
/// never read by the engine itself.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor uniform(Shape shape, Rng& rng, double lo, double hi, bool requires_grad = false);
  /// Kaiming-uniform fan-in initialization: U(-sqrt(3)*g/sqrt(fan_in), +...)
  /// with gain g = sqrt(2) (ReLU networks).
  static Tensor kaiming_uniform(Shape shape, Rng& rng, int64_t fan_in, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(data_); }
  const Shape& shape() const { return shape_; }
  int64_t size() const { return numel(shape_); }
  int64_t dim(size_t i) const { return shape_.at(i); }
  int rank() const { return static_cast<int>(shape_.size()); }

  std::span<double> values() { return {data_->data(), data_->size()}; }
  std::span<const double> values() const { return {data_->data(), data_->size()}; }
  double item() const;

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool rg) { requires_grad_ = rg; }

  /// Storage identity; the tape keys nodes on this.
  const void* storage_id() const { return data_.get(); }

  /// Deep copy with fresh storage.
  Tensor clone() const;

  /// Gradient populated by the last Tape::gradients call (optional).
  std::shared_ptr<std::vector<double>> grad;

 private:
  Shape shape_;
  std::shared_ptr<std::vector<double>> data_;
  bool requires_grad_ = false;
};

/// Elementwise in-place update p -= lr * g outside any tape. Frozen tensors
/// must not be passed here; callers enforce that.
void sgd_step(std::span<Tensor> params, std::span<const Tensor> grads, double lr);

uint64_t hash_tensor_bytes(const Tensor& t, uint64_t seed = 0xCBF29CE484222325ull);

}  // namespace phn

#endif  // PHN_TENSOR_HPP
