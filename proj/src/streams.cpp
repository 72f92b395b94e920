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

#include "streams.hpp"

#include <algorithm>
#include <map>

namespace phn {

namespace {

constexpr const char* kModule = "streams";

/// Subset of `ds` with classes remapped through `remap` (original -> local).
Dataset subset_remap(const Dataset& ds, const std::map<int, int>& remap, int num_local) {
  std::vector<int64_t> keep;
  for (int64_t i = 0; i < ds.size(); ++i)
    if (remap.count(ds.labels[static_cast<size_t>(i)])) keep.push_back(i);
  auto [images, labels] = gather(ds, keep);
  Dataset out;
  out.images = std::move(images);
  out.labels.reserve(labels.size());
  for (int l : labels) out.labels.push_back(remap.at(l));
  out.num_classes = num_local;
  out.validate("make_split_stream");
  return out;
}

std::vector<int> shuffled_classes(int num_classes, uint64_t seed) {
  std::vector<int> order(static_cast<size_t>(num_classes));
  for (int i = 0; i < num_classes; ++i) order[static_cast<size_t>(i)] = i;
  Rng rng = Rng(seed).child("class_order");
  for (int i = num_classes - 1; i > 0; --i)
    std::swap(order[static_cast<size_t>(i)], order[rng.below(static_cast<uint32_t>(i + 1))]);
  return order;
}

std::string order_str(const std::vector<int>& order) {
  std::string s;
  for (size_t i = 0; i < order.size(); ++i) {
    if (i) s += " ";
    s += std::to_string(order[i]);
  }
  return s;
}

}  // namespace

Stream make_split_stream(const Dataset& train, const Dataset& test, int n_experiences,
                         int classes_per_exp, uint64_t seed) {
  train.validate("make_split_stream");
  test.validate("make_split_stream");
  if (train.num_classes != test.num_classes)
    throw ContractError(kModule, "make_split_stream", "train/test class counts differ");
  const int needed = n_experiences * classes_per_exp;
  if (n_experiences < 1 || classes_per_exp < 1 || needed > train.num_classes)
    throw ContractError(kModule, "make_split_stream",
                        "need " + std::to_string(needed) + " classes, dataset has " +
                            std::to_string(train.num_classes));

  const std::vector<int> order = shuffled_classes(train.num_classes, seed);
  Stream stream;
  for (int e = 0; e < n_experiences; ++e) {
    std::map<int, int> remap;
    for (int c = 0; c < classes_per_exp; ++c)
      remap[order[static_cast<size_t>(e * classes_per_exp + c)]] = c;
    Experience exp;
    exp.train = subset_remap(train, remap, classes_per_exp);
    exp.test = subset_remap(test, remap, classes_per_exp);
    exp.task_id = e;
    stream.experiences.push_back(std::move(exp));
  }
  stream.provenance = "type=split seed=" + std::to_string(seed) +
                      " experiences=" + std::to_string(n_experiences) +
                      " classes_per_exp=" + std::to_string(classes_per_exp) +
                      " class_order=" + order_str(order);
  return stream;
}

Stream make_noisy_stream(const Dataset& train, const Dataset& test, uint64_t seed,
                         bool apply_transforms) {
  if (train.num_classes < 20)
    throw ContractError(kModule, "make_noisy_stream", "need at least 20 classes, got " +
                                                          std::to_string(train.num_classes));
  Stream stream = make_split_stream(train, test, 4, 5, seed);
  if (apply_transforms) {
    auto apply = [](Experience& e, auto&& fn, const std::string& desc) {
      e.train.images = fn(e.train.images);
      e.test.images = fn(e.test.images);
      e.transform_desc = desc;
    };
    apply(stream.experiences[1], [](const Tensor& t) { return solarize(t); }, "solarize");
    apply(stream.experiences[2], [](const Tensor& t) { return gaussian_blur(t); },
          "gaussian_blur");
    apply(stream.experiences[3],
          [](const Tensor& t) { return grayscale(gaussian_blur(adjust_contrast(t))); },
          "contrast+gaussian_blur+grayscale");
  }
  stream.provenance = "type=noisy transforms=" + std::string(apply_transforms ? "on" : "off") +
                      " " + stream.provenance.substr(std::string("type=split ").size());
  return stream;
}

Stream make_two_experience_stream(Dataset train_a, Dataset test_a, Dataset train_b,
                                  Dataset test_b) {
  train_a.validate("make_two_experience_stream");
  test_a.validate("make_two_experience_stream");
  train_b.validate("make_two_experience_stream");
  test_b.validate("make_two_experience_stream");
  Stream stream;
  Experience a;
  a.train = std::move(train_a);
  a.test = std::move(test_a);
  a.task_id = 0;
  Experience b;
  b.train = std::move(train_b);
  b.test = std::move(test_b);
  b.task_id = 1;
  stream.experiences.push_back(std::move(a));
  stream.experiences.push_back(std::move(b));
  stream.provenance = "type=two-experience";
  return stream;
}

}  // namespace phn
