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

#include "finite_diff.hpp"

#include <cmath>

#include "tape.hpp"

namespace phn {

double finite_diff_check(const std::function<Tensor()>& f, std::span<Tensor> params, double eps) {
  if (eps <= 0.0) throw ContractError("numerics", "finite_diff_check", "eps must be > 0");

  Tape tape;
  std::vector<Tensor> analytic;
  {
    TapeScope scope(&tape);
    Tensor loss = f();
    if (!std::isfinite(loss.item()))
      throw ContractError("numerics", "finite_diff_check", "non-finite loss value");
    analytic = tape.gradients(loss, {params.data(), params.size()});
  }

  double max_rel = 0.0;
  NoGradScope no_grad;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto vals = params[pi].values();
    auto grads = analytic[pi].values();
    for (size_t i = 0; i < vals.size(); ++i) {
      const double orig = vals[i];
      vals[i] = orig + eps;
      const double fp = f().item();
      vals[i] = orig - eps;
      const double fm = f().item();
      vals[i] = orig;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw ContractError("numerics", "finite_diff_check", "non-finite perturbed value");
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = grads[i];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      max_rel = std::max(max_rel, std::fabs(a - numeric) / denom);
    }
  }
  return max_rel;
}

}  // namespace phn
