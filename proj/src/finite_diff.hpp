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

#ifndef PHN_FINITE_DIFF_HPP
#define PHN_FINITE_DIFF_HPP

#include <functional>
#include <span>

#include "tensor.hpp"

namespace phn {

/// Central-difference gradient check. `f` builds the scalar loss from the
/// current contents of `params` (it is invoked repeatedly while coordinates
/// are perturbed in place and must be deterministic). Analytic gradients come
/// from one taped evaluation; the relative error per coordinate uses
/// denominator max(|analytic|, |numeric|, 1e-8). Returns the maximum
/// relative error. Run under Precision::F64 for meaningful bounds.
double finite_diff_check(const std::function<Tensor()>& f, std::span<Tensor> params, double eps);

}  // namespace phn

#endif  // PHN_FINITE_DIFF_HPP
