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

#ifndef PHN_STREAMS_HPP
#define PHN_STREAMS_HPP

#include "dataset.hpp"

namespace phn {

/// One element of a continual-learning stream: train/test sets sharing a
/// class space plus the task id.
struct Experience {
  Dataset train, test;
  int task_id = 0;
  std::string transform_desc = "none";
};

struct Stream {
  std::vector<Experience> experiences;
  std::string provenance;  // source, seed, class order
};

/// Shuffles classes by seed, partitions them consecutively into
/// n_experiences groups of classes_per_exp, and remaps labels to
/// [0, classes_per_exp) within each experience.
Stream make_split_stream(const Dataset& train, const Dataset& test, int n_experiences,
                         int classes_per_exp, uint64_t seed);

/// Four experiences of five classes from the first 20 shuffled classes.
/// With transforms on, experience 2 is solarized, experience 3 Gaussian
/// blurred, experience 4 contrast -> blur -> grayscale; experience 1 is
/// untouched. The clean twin (apply_transforms = false) shares the exact
/// class partition.
Stream make_noisy_stream(const Dataset& train, const Dataset& test, uint64_t seed,
                         bool apply_transforms = true);

/// Two-experience stream over arbitrary dataset pairs (task ids 0 and 1).
Stream make_two_experience_stream(Dataset train_a, Dataset test_a, Dataset train_b,
                                  Dataset test_b);

}  // namespace phn

#endif  // PHN_STREAMS_HPP
