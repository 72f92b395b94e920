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

#ifndef PHN_OPS_HPP
#define PHN_OPS_HPP

#include <optional>
#include <vector>

#include "tape.hpp"
#include "tensor.hpp"

namespace phn {

// All primitives compute in double and round results through float in F32
// mode. They record onto the ambient tape when one exists and any input
// tracks gradients.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor sum(const Tensor& a);  // -> scalar [1]
Tensor relu(const Tensor& a);
Tensor tanh_op(const Tensor& a);

/// x:[N,in] w:[out,in] b:[out] (optional, pass undefined Tensor to skip).
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

/// Cross-correlation (no kernel flip). x:[N,Cin,H,W] w:[Cout,Cin,k,k].
Tensor conv2d(const Tensor& x, const Tensor& w, int stride, int padding);

enum class BnMode { Train, Eval };

/// Per-channel running statistics of a batch-norm site, owned by the caller.
struct RunningStats {
  std::vector<double> mean, var;
  bool initialized = false;
  void reset(int64_t channels) {
    mean.assign(static_cast<size_t>(channels), 0.0);
    var.assign(static_cast<size_t>(channels), 1.0);
    initialized = true;
  }
};

/// x:[N,C,H,W] gamma,beta:[C]. Train mode normalizes by batch statistics
/// (epsilon 1e-5) and updates `stats` with momentum 0.1; eval mode uses
/// `stats`. Differentiable w.r.t. x, gamma, beta in both modes.
Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, RunningStats& stats,
                  BnMode mode, double momentum = 0.1, double eps = 1e-5);

/// x:[N,C,H,W], kernel k, stride s (default s=k), no padding.
Tensor avg_pool2d(const Tensor& x, int k, int s = -1);

/// [N,...] -> [N, prod(rest)].
Tensor flatten2(const Tensor& x);

/// logits:[N,C]; mean over the batch of -log softmax(logits)[label].
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels);

Tensor reshape(const Tensor& x, Shape shape);
Tensor permute(const Tensor& x, const std::vector<int>& perm);

/// a:[n,p] b:[n,q] -> [n,p+q].
Tensor concat_cols(const Tensor& a, const Tensor& b);
/// Stack along axis 0; trailing dimensions must match.
Tensor concat_rows(const Tensor& a, const Tensor& b);
/// v:[1,c] -> [n,c] (rows repeated).
Tensor repeat_row(const Tensor& v, int64_t n);
/// m:[R,C], row r -> [1,C].
Tensor select_row(const Tensor& m, int64_t r);
/// Contiguous flat range [offset, offset+len) -> [len].
Tensor slice_flat(const Tensor& x, int64_t offset, int64_t len);

/// sum((a-b)^2) as a composite of sub/mul/sum.
Tensor sum_sq_diff(const Tensor& a, const Tensor& b);

}  // namespace phn

#endif  // PHN_OPS_HPP
