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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "checkpoint.hpp"
#include "model.hpp"
#include "tape.hpp"
#include "test_oracles.hpp"

using namespace phn;
using phn::testing::max_abs_diff;

namespace {

WeightSet own_weights_for_suffix(const DecomposedModel& d) {
  WeightSet ws;
  for (const auto& [name, shape] : d.suffix_slots())
    ws.emplace(name, d.model().params().at(name));
  return ws;
}

}  // namespace

TEST_CASE("forward produces logits of the right shape") {
  MainModel m = build_slim_resnet(5, 20, MainModel::ClassifierKind::Single, 0);
  Rng rng(1);
  Tensor x = Tensor::uniform({1, 3, 32, 32}, rng, 0.0, 1.0);
  Tensor logits = m.forward(x, BnMode::Eval, 0);
  CHECK(logits.shape() == Shape{1, 5});
}

TEST_CASE("stage output shapes on 32x32 input") {
  MainModel m = build_slim_resnet(5, 20, MainModel::ClassifierKind::Single, 0);
  Rng rng(2);
  Tensor x = Tensor::uniform({1, 3, 32, 32}, rng, 0.0, 1.0);
  StatsStore stats;
  const std::vector<Shape> want = {
      {1, 20, 32, 32}, {1, 20, 32, 32}, {1, 40, 16, 16}, {1, 80, 8, 8}, {1, 160, 4, 4}};
  for (int seg = 0; seg <= 4; ++seg) {
    Tensor h = m.forward_range(x, 0, seg + 1, BnMode::Eval, WeightSource(m.params()), stats, 0);
    CHECK(h.shape() == want[static_cast<size_t>(seg)]);
  }
  CHECK(m.latent_shape(1, 32, 32) == Shape{20, 32, 32});
  CHECK(m.latent_shape(2, 32, 32) == Shape{40, 16, 16});
  CHECK(m.latent_shape(3, 32, 32) == Shape{80, 8, 8});
  CHECK(m.latent_shape(4, 32, 32) == Shape{160, 4, 4});
  CHECK(m.latent_shape(0, 32, 32) == Shape{3, 32, 32});
}

TEST_CASE("parameter count matches module enumeration and pinned value") {
  MainModel m = build_slim_resnet(5, 20, MainModel::ClassifierKind::Single, 0);
  int64_t expect = 0;
  for (const ModuleSpec& mod : m.modules()) expect += mod.param_count();
  CHECK(m.total_param_count() == expect);
  CHECK(m.total_param_count() == 1093945);  // regression pin for nf=20, 5 classes
}

TEST_CASE("decompose partitions parameter names for every k") {
  for (int k = 0; k <= 4; ++k) {
    DecomposedModel d = decompose(build_slim_resnet(5, 8, MainModel::ClassifierKind::Single, 3), k);
    auto prefix = d.prefix_param_names();
    auto suffix = d.suffix_param_names();
    std::set<std::string> all(prefix.begin(), prefix.end());
    for (const auto& n : suffix) {
      CHECK(all.count(n) == 0);
      all.insert(n);
    }
    auto names = d.model().param_names();
    CHECK(all == std::set<std::string>(names.begin(), names.end()));
  }
}

TEST_CASE("decompose k=0 prefix is the identity with no parameters") {
  DecomposedModel d = decompose(build_slim_resnet(5, 8, MainModel::ClassifierKind::Single, 3), 0);
  CHECK(d.prefix_param_names().empty());
  Rng rng(4);
  Tensor x = Tensor::uniform({2, 3, 16, 16}, rng, 0.0, 1.0);
  Tensor z = d.forward_prefix(x, BnMode::Eval);
  CHECK(max_abs_diff(x, z) == 0.0);
}

TEST_CASE("decompose k=4 generates only pool+classifier") {
  DecomposedModel d = decompose(build_slim_resnet(5, 8, MainModel::ClassifierKind::Single, 3), 4);
  auto slots = d.suffix_slots();
  REQUIRE(slots.size() == 2);
  CHECK(slots[0].first == "classifier.weight");
  CHECK(slots[1].first == "classifier.bias");
}

TEST_CASE("decompose out-of-range k rejected") {
  CHECK_THROWS_AS(decompose(build_slim_resnet(5, 8, MainModel::ClassifierKind::Single, 3), 5),
                  ContractError);
  CHECK_THROWS_AS(decompose(build_slim_resnet(5, 8, MainModel::ClassifierKind::Single, 3), -1),
                  ContractError);
}

TEST_CASE("composition equality for every k") {
  PrecisionGuard p64(Precision::F64);
  Rng rng(5);
  Tensor x = Tensor::uniform({2, 3, 32, 32}, rng, 0.0, 1.0);
  for (int k = 0; k <= 4; ++k) {
    MainModel base = build_slim_resnet(5, 8, MainModel::ClassifierKind::Single, 7);
    Tensor full = base.forward(x, BnMode::Eval, 0);
    DecomposedModel d = decompose(std::move(base), k);
    StatsStore suffix_stats;
    Tensor composed =
        d.forward_generated(x, own_weights_for_suffix(d), 0, BnMode::Eval, suffix_stats);
    CHECK(max_abs_diff(full, composed) <= 1e-6);
  }
}

TEST_CASE("forward_decomposed with zero classifier weights gives zero logits") {
  DecomposedModel d = decompose(build_slim_resnet(5, 8, MainModel::ClassifierKind::Single, 3), 4);
  WeightSet ws;
  ws.emplace("classifier.weight", Tensor::zeros({5, 64}));
  ws.emplace("classifier.bias", Tensor::zeros({5}));
  Rng rng(6);
  Tensor x = Tensor::uniform({2, 3, 32, 32}, rng, 0.0, 1.0);
  StatsStore stats;
  Tensor logits = d.forward_generated(x, ws, 0, BnMode::Eval, stats);
  for (double v : logits.values()) CHECK(v == 0.0);
}

TEST_CASE("forward_decomposed rejects missing and extra weight names") {
  DecomposedModel d = decompose(build_slim_resnet(5, 8, MainModel::ClassifierKind::Single, 3), 4);
  Rng rng(7);
  Tensor x = Tensor::uniform({1, 3, 32, 32}, rng, 0.0, 1.0);
  StatsStore stats;
  WeightSet missing;
  missing.emplace("classifier.weight", Tensor::zeros({5, 64}));
  CHECK_THROWS_WITH_AS(d.forward_generated(x, missing, 0, BnMode::Eval, stats),
                       doctest::Contains("classifier.bias"), ContractError);
  WeightSet extra = own_weights_for_suffix(d);
  extra.emplace("bogus.weight", Tensor::zeros({1}));
  CHECK_THROWS_WITH_AS(d.forward_generated(x, extra, 0, BnMode::Eval, stats),
                       doctest::Contains("bogus.weight"), ContractError);
}

TEST_CASE("perturbing one generated weight changes the logits") {
  DecomposedModel d = decompose(build_slim_resnet(5, 8, MainModel::ClassifierKind::Single, 3), 2);
  Rng rng(8);
  Tensor x = Tensor::uniform({1, 3, 32, 32}, rng, 0.0, 1.0);
  StatsStore s1, s2;
  WeightSet ws = own_weights_for_suffix(d);
  Tensor base = d.forward_generated(x, ws, 0, BnMode::Eval, s1);
  WeightSet perturbed;
  for (auto& [name, t] : ws) perturbed.emplace(name, t.clone());
  perturbed.at("layer3.0.conv1.weight").values()[0] += 0.5;
  Tensor changed = d.forward_generated(x, perturbed, 0, BnMode::Eval, s2);
  CHECK(max_abs_diff(base, changed) > 0.0);
}

TEST_CASE("freeze locks the prefix") {
  DecomposedModel d = decompose(build_slim_resnet(5, 8, MainModel::ClassifierKind::Single, 9), 2);
  Rng rng(10);
  Tensor x = Tensor::uniform({4, 3, 16, 16}, rng, 0.0, 1.0);
  const std::vector<int> labels = {0, 1, 2, 3};

  // Before freeze, prefix gradients are nonzero on a random batch.
  {
    Tape tape;
    TapeScope scope(&tape);
    Tensor logits = d.model().forward(x, BnMode::Train, 0);
    Tensor loss = cross_entropy(logits, labels);
    std::vector<Tensor> phi;
    for (const auto& n : d.prefix_param_names()) phi.push_back(d.model().params().at(n));
    auto grads = tape.gradients(loss, phi);
    double norm = 0.0;
    for (const Tensor& g : grads)
      for (double v : g.values()) norm += v * v;
    CHECK(norm > 0.0);
  }

  d.freeze();
  CHECK_THROWS_AS(d.freeze(), ContractError);
  const uint64_t frozen = d.frozen_hash();

  // Prefix parameters no longer request gradients.
  for (const auto& n : d.prefix_param_names())
    CHECK_FALSE(d.model().params().at(n).requires_grad());

  // Stepping the suffix for a while leaves the prefix hash unchanged.
  for (int step = 0; step < 20; ++step) {
    Tape tape;
    TapeScope scope(&tape);
    Tensor logits = d.model().forward(x, BnMode::Train, 0);
    Tensor loss = cross_entropy(logits, labels);
    std::vector<Tensor> theta;
    for (const auto& n : d.suffix_param_names()) theta.push_back(d.model().params().at(n));
    auto grads = tape.gradients(loss, theta);
    sgd_step(theta, grads, 0.05);
  }
  CHECK(d.prefix_hash() == frozen);
}

TEST_CASE("multi-head classifier heads are independent") {
  MainModel m = build_slim_resnet(5, 8, MainModel::ClassifierKind::MultiHead, 11);
  m.ensure_head(0);
  m.ensure_head(1);
  m.ensure_head(1);  // idempotent
  CHECK(m.has_head(0));
  CHECK(m.has_head(1));
  CHECK_FALSE(m.has_head(2));
  const Tensor& w0 = m.params().at("classifier.task0.weight");
  const Tensor& w1 = m.params().at("classifier.task1.weight");
  CHECK(max_abs_diff(w0, w1) > 0.0);
  Rng rng(12);
  Tensor x = Tensor::uniform({1, 3, 32, 32}, rng, 0.0, 1.0);
  Tensor l0 = m.forward(x, BnMode::Eval, 0);
  Tensor l1 = m.forward(x, BnMode::Eval, 1);
  CHECK(max_abs_diff(l0, l1) > 0.0);
}

TEST_CASE("model checkpoint round-trips parameters and header") {
  MainModel m = build_slim_resnet(5, 8, MainModel::ClassifierKind::Single, 13);
  Checkpoint ck;
  ck.header["nf"] = "8";
  ck.header["k"] = "2";
  ck.header["frozen_hash"] = "12345";
  for (const auto& [name, t] : m.params()) ck.tensors.emplace(name, t);
  const std::string path = "model_test.ckpt";
  ck.save(path);
  Checkpoint rd = Checkpoint::load(path);
  CHECK(rd.header.at("nf") == "8");
  CHECK(rd.header.at("frozen_hash") == "12345");
  REQUIRE(rd.tensors.size() == m.params().size());
  for (const auto& [name, t] : m.params()) {
    REQUIRE(rd.tensors.count(name) == 1);
    CHECK(max_abs_diff(rd.tensors.at(name), t) == 0.0);  // f32 values round-trip bit-exactly
  }
  std::remove(path.c_str());
}
