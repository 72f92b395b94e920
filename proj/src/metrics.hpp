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

#ifndef PHN_METRICS_HPP
#define PHN_METRICS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace phn {

/// Lower-triangular accuracy bookkeeping: row t holds the accuracy on each
/// test set i <= t after training through experience t.
class AccuracyMatrix {
 public:
  void add_row(std::vector<double> row);  // row t must have t+1 entries in [0,1]
  int rows() const { return static_cast<int>(r_.size()); }
  double at(int t, int i) const;
  const std::vector<std::vector<double>>& data() const { return r_; }

  std::string to_csv() const;  // header "after_exp,acc_exp_1,..."
  static AccuracyMatrix from_csv(const std::string& text);

 private:
  std::vector<std::vector<double>> r_;
};

/// Mean accuracy over all experiences seen after training through t.
double aca(const AccuracyMatrix& m, int t);

/// Mean over i < t of (peak accuracy on i up to t) - (final accuracy on i).
/// Requires at least two completed experiences (t >= 1, 0-based).
double forgetting(const AccuracyMatrix& m, int t);

/// Mean of the diagonal up to t: accuracy on each experience right after
/// learning it.
double learning_accuracy(const AccuracyMatrix& m, int t);

/// 32-bit accounting: latent replay stores buffer_size exemplars of
/// latent_shape; a hypernetwork snapshot stores param_count values.
int64_t memory_lr_bytes(const Shape& latent_shape, int64_t buffer_size);
int64_t memory_hn_bytes(int64_t param_count);

/// MiB (2^20 bytes) at two decimals, round half to even.
std::string format_mib(int64_t bytes);

struct MemoryRow {
  std::string label;
  int64_t bytes;
  std::string mib;
};

}  // namespace phn

#endif  // PHN_METRICS_HPP
