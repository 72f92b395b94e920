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

#include <cstdio>

#include "finite_diff.hpp"
#include "hypernet.hpp"
#include "tape.hpp"
#include "test_oracles.hpp"

using namespace phn;
using phn::testing::max_abs_diff;

namespace {

std::vector<ModuleSpec> toy_targets() {
  return {
      {ModuleSpec::Kind::Conv, "layerA.conv", 3, 2, 3, 3, 1, 1},
      {ModuleSpec::Kind::BatchNorm, "layerA.bn", 3, 3, 3, 0, 1, 0},
      {ModuleSpec::Kind::Linear, "classifier", 5, 4, 2, 0, 1, 0},
  };
}

HyperConfig tiny_cfg() {
  HyperConfig cfg;
  cfg.embed_dim = 4;
  cfg.hidden1 = 5;
  cfg.hidden2 = 4;
  cfg.h_out = 4;
  cfg.lookup_dim = 2;
  return cfg;
}

double ws_max_diff(const WeightSet& a, const WeightSet& b) {
  double m = 0.0;
  for (const auto& [name, t] : a) m = std::max(m, max_abs_diff(t, b.at(name)));
  return m;
}

}  // namespace

TEST_CASE("generate is deterministic and fills every slot with the right shape") {
  Hypernet hn(toy_targets(), tiny_cfg(), 7);
  WeightSet a = hn.generate(0);
  WeightSet b = hn.generate(0);
  CHECK(ws_max_diff(a, b) == 0.0);

  REQUIRE(a.count("layerA.conv.weight"));
  CHECK(a.at("layerA.conv.weight").shape() == Shape{3, 2, 3, 3});
  CHECK(a.at("layerA.bn.gamma").shape() == Shape{3});
  CHECK(a.at("layerA.bn.beta").shape() == Shape{3});
  CHECK(a.at("classifier.weight").shape() == Shape{2, 4});
  CHECK(a.at("classifier.bias").shape() == Shape{2});

  // gamma starts near 1, beta near 0
  for (double v : a.at("layerA.bn.gamma").values()) CHECK(std::fabs(v - 1.0) < 0.1);
  for (double v : a.at("layerA.bn.beta").values()) CHECK(std::fabs(v) < 0.1);
}

TEST_CASE("generated conv slot for a 160->160 k3 layer has shape (160,160,3,3)") {
  std::vector<ModuleSpec> targets = {
      {ModuleSpec::Kind::Conv, "big.conv", 4, 160, 160, 3, 1, 1}};
  Hypernet hn(targets, HyperConfig{}, 3);
  WeightSet ws = hn.generate(0);
  CHECK(ws.at("big.conv.weight").shape() == Shape{160, 160, 3, 3});
}

TEST_CASE("distinct task embeddings give different weight sets") {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Hypernet hn(toy_targets(), tiny_cfg(), seed);
    WeightSet a = hn.generate(0);
    WeightSet b = hn.generate(1);
    CHECK(ws_max_diff(a, b) > 0.0);
  }
}

TEST_CASE("unseen task ids are initialized exactly once and order-independently") {
  Hypernet h1(toy_targets(), tiny_cfg(), 11);
  Hypernet h2(toy_targets(), tiny_cfg(), 11);
  h1.ensure_task(0);
  h1.ensure_task(3);
  h2.ensure_task(3);
  h2.ensure_task(0);
  CHECK(max_abs_diff(h1.params().at("embed.task3"), h2.params().at("embed.task3")) == 0.0);
  // Re-ensuring does not reinitialize.
  Tensor before = h1.params().at("embed.task3").clone();
  h1.params().at("embed.task3").values()[0] += 1.0;
  h1.ensure_task(3);
  CHECK(h1.params().at("embed.task3").values()[0] == doctest::Approx(before.values()[0] + 1.0));
}

TEST_CASE("empty manifest is a configuration error") {
  CHECK_THROWS_AS(Hypernet({}, tiny_cfg(), 0), ConfigError);
}

TEST_CASE("gradients of generated weights w.r.t. hypernet parameters check out") {
  PrecisionGuard p64(Precision::F64);
  Hypernet hn(toy_targets(), tiny_cfg(), 19);
  hn.ensure_task(0);
  auto params = hn.param_list();
  Rng rng(5);
  // Random fixed mixing weights make the scalar probe cover every output.
  std::map<std::string, Tensor> probe;
  for (auto& [name, t] : hn.generate(0))
    probe.emplace(name, Tensor::uniform(t.shape(), rng, -1.0, 1.0));
  auto f = [&] {
    WeightSet ws = hn.generate(0);
    Tensor total = Tensor::zeros({1});
    for (auto& [name, t] : ws)
      total = add(total, sum(mul(reshape(t, {t.size()}), reshape(probe.at(name), {t.size()}))));
    return total;
  };
  CHECK(finite_diff_check(f, params, 1e-5) < 1e-4);
}

TEST_CASE("conv head parameter count formula") {
  CHECK(conv_head_param_count(160, 160, 3, 32, 8) == 58880);
  // direct generation for comparison: a*b*k*k*h
  CHECK(static_cast<int64_t>(160) * 160 * 3 * 3 == 230400);

  // formula equals enumeration of a constructed head
  Rng rng(31);
  for (int trial = 0; trial < 12; ++trial) {
    const int64_t a = 1 + rng.below(12), b = 1 + rng.below(12);
    const int64_t k = rng.below(2) ? 1 : 3;
    HyperConfig cfg = tiny_cfg();
    cfg.h_out = 1 + rng.below(8);
    cfg.lookup_dim = 1 + rng.below(6);
    std::vector<ModuleSpec> targets = {{ModuleSpec::Kind::Conv, "t.conv", 1, a, b, k, 1, 1}};
    Hypernet hn(targets, cfg, trial);
    const int64_t head = hn.params().at("head.t.conv.lookup").size() +
                         hn.params().at("head.t.conv.weight").size();
    CHECK(head == conv_head_param_count(a, b, k, cfg.h_out, cfg.lookup_dim));
  }

  // strictly increasing in d
  int64_t prev = 0;
  for (int64_t d = 1; d <= 16; ++d) {
    const int64_t c = conv_head_param_count(6, 4, 3, 8, d);
    CHECK(c > prev);
    prev = c;
  }
}

TEST_CASE("hypernet_param_count equals instantiated enumeration") {
  HyperConfig cfg = tiny_cfg();
  Hypernet hn(toy_targets(), cfg, 23);
  hn.ensure_task(0);
  hn.ensure_task(1);
  CHECK(hn.param_count() == hypernet_param_count(toy_targets(), cfg, 2));
}

TEST_CASE("compression rows are monotone with a 0% anchor at the largest d") {
  auto rows = compression_rows(toy_targets(), tiny_cfg(), {2, 4, 8, 16}, 4);
  REQUIRE(rows.size() == 4);
  CHECK(rows.back().compression_pct == 0.0);
  for (size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].total_params > rows[i - 1].total_params);
    CHECK(rows[i].compression_pct < rows[i - 1].compression_pct);
  }
}

TEST_CASE("snapshot is immutable under live mutation and untrained snapshot matches live") {
  Hypernet hn(toy_targets(), tiny_cfg(), 29);
  hn.ensure_task(0);
  Hypernet snap = hn.snapshot();
  WeightSet live0 = hn.generate(0);
  WeightSet snap0 = snap.generate_using(snap.params(), 0);
  CHECK(ws_max_diff(live0, snap0) == 0.0);

  hn.params().at("trunk.fc1.weight").values()[0] += 0.5;
  WeightSet snap0_after = snap.generate_using(snap.params(), 0);
  CHECK(ws_max_diff(snap0, snap0_after) == 0.0);
  WeightSet live0_after = hn.generate(0);
  CHECK(ws_max_diff(live0, live0_after) > 0.0);
}

TEST_CASE("snapshot round-trips through the checkpoint format bit-exactly") {
  Hypernet hn(toy_targets(), tiny_cfg(), 37);
  hn.ensure_task(0);
  Hypernet snap = hn.snapshot();
  Checkpoint ck;
  ck.header["kind"] = "hypernet";
  snap.fill_checkpoint(ck);
  const std::string path = "hn_test.ckpt";
  ck.save(path);
  Checkpoint rd = Checkpoint::load(path);
  Hypernet restored(toy_targets(), tiny_cfg(), 37);
  restored.load_from_checkpoint(rd);
  CHECK(ws_max_diff(snap.generate_using(snap.params(), 0),
                    restored.generate_using(restored.params(), 0)) == 0.0);
  CHECK(!rd.manifest.empty());
  std::remove(path.c_str());
}
