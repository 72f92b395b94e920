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

#ifndef PHN_TAPE_HPP
#define PHN_TAPE_HPP

#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "tensor.hpp"

namespace phn {

class Tape;

/// Gradient accumulation access handed to backward rules. of(slot) returns
/// the accumulation buffer for the slot-th input, or nullptr when that input
/// does not track gradients.
class GradSink {
 public:
  std::vector<double>* of(size_t slot);

 private:
  friend class Tape;
  GradSink(Tape* tape, const std::vector<int>& ids, const std::vector<char>& tracked,
           const std::vector<int64_t>& sizes,
           std::vector<std::unique_ptr<std::vector<double>>>* bufs)
      : tape_(tape), ids_(ids), tracked_(tracked), sizes_(sizes), bufs_(bufs) {}
  Tape* tape_;
  const std::vector<int>& ids_;
  const std::vector<char>& tracked_;
  const std::vector<int64_t>& sizes_;
  std::vector<std::unique_ptr<std::vector<double>>>* bufs_;
};

/// Records forward operations in execution order; operation inputs always
/// precede the operations consuming them, so a single reverse sweep visits
/// each node once.
class Tape {
 public:
  using Backward = std::function<void(std::span<const double> dout, GradSink& sink)>;

  /// Registers an operation. `out` gains a node id; inputs are registered as
  /// they appear.
  void record(const Tensor& out, std::initializer_list<const Tensor*> inputs, Backward fn);

  bool knows(const Tensor& t) const;

  /// Reverse sweep from `loss` (a scalar). Returns d loss / d param for each
  /// param, zeros for params on the tape but not reachable from the loss.
  /// Params entirely unknown to the tape raise a contract error unless
  /// `allow_unknown` is set (then they yield zeros).
  std::vector<Tensor> gradients(const Tensor& loss, std::span<const Tensor> params,
                                bool allow_unknown = false);

  size_t num_records() const { return records_.size(); }
  void clear();

 private:
  friend class GradSink;
  int id_of(const Tensor& t);
  int find(const Tensor& t) const;

  struct Record {
    int out;
    std::vector<int> inputs;
    std::vector<char> tracked;      // per input: participates in gradients
    std::vector<int64_t> in_sizes;  // per input: element count
    Backward fn;
  };

  std::vector<Record> records_;
  std::unordered_map<const void*, int> ids_;
  // Node ids key on storage addresses, so every recorded tensor must stay
  // alive for the tape's lifetime or a freed block could be reused and
  // collide with a later node.
  std::vector<Tensor> pinned_;
  int next_id_ = 0;
};

/// Ambient tape used by the operation primitives. A null scope disables
/// recording (evaluation / constant generation).
Tape* active_tape();

class TapeScope {
 public:
  explicit TapeScope(Tape* t);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* prev_;
};

struct NoGradScope : TapeScope {
  NoGradScope() : TapeScope(nullptr) {}
};

}  // namespace phn

#endif  // PHN_TAPE_HPP
