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

#include <cmath>

#include "finite_diff.hpp"
#include "ops.hpp"
#include "tape.hpp"
#include "tensor.hpp"
#include "test_oracles.hpp"

using namespace phn;
using phn::testing::conv2d_reference;
using phn::testing::cross_entropy_reference;
using phn::testing::max_abs_diff;

namespace {

Tensor rand_tensor(Shape shape, Rng& rng, bool rg = false) {
  return Tensor::uniform(std::move(shape), rng, -1.0, 1.0, rg);
}

}  // namespace

TEST_CASE("rng determinism and child streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c = Rng(42).child("x"), d = Rng(42).child("y");
  CHECK(c.next_u64() != d.next_u64());
  // below() stays in range and covers values
  Rng e(7);
  std::vector<int> seen(5, 0);
  for (int i = 0; i < 200; ++i) seen[e.below(5)]++;
  for (int v : seen) CHECK(v > 0);
}

TEST_CASE("conv2d scalar scaling example") {
  Tensor x = Tensor::full({1, 1, 3, 3}, 1.0);
  Tensor w = Tensor::full({1, 1, 1, 1}, 2.0);
  Tensor y = conv2d(x, w, 1, 0);
  CHECK(y.shape() == Shape{1, 1, 3, 3});
  for (double v : y.values()) CHECK(v == doctest::Approx(2.0));
}

TEST_CASE("conv2d paper exemplar shape 20x32x32") {
  Rng rng(0);
  Tensor x = rand_tensor({1, 3, 32, 32}, rng);
  Tensor w = rand_tensor({20, 3, 3, 3}, rng);
  Tensor y = conv2d(x, w, 1, 1);
  CHECK(y.shape() == Shape{1, 20, 32, 32});
}

TEST_CASE("conv2d matches direct-loop reference") {
  PrecisionGuard p64(Precision::F64);
  Rng rng(123);
  Tensor x = rand_tensor({1, 2, 5, 5}, rng);
  Tensor w = rand_tensor({3, 2, 3, 3}, rng);
  for (int stride : {1, 2})
    for (int pad : {0, 1}) {
      Tensor got = conv2d(x, w, stride, pad);
      Tensor want = conv2d_reference(x, w, stride, pad);
      CHECK(max_abs_diff(got, want) < 1e-6);
    }
}

TEST_CASE("conv2d contract violations") {
  Tensor x = Tensor::zeros({1, 2, 5, 5});
  Tensor w_badc = Tensor::zeros({3, 4, 3, 3});
  CHECK_THROWS_AS(conv2d(x, w_badc, 1, 0), ContractError);
  Tensor w_even = Tensor::zeros({3, 2, 2, 2});
  CHECK_THROWS_AS(conv2d(x, w_even, 1, 0), ContractError);
  Tensor w = Tensor::zeros({3, 2, 3, 3});
  CHECK_THROWS_AS(conv2d(x, w, 0, 0), ContractError);
  CHECK_THROWS_AS(conv2d(x, w, 1, -1), ContractError);
}

TEST_CASE("batch_norm constant channel becomes zero") {
  RunningStats st;
  Tensor x = Tensor::full({2, 3, 2, 2}, 5.0);
  Tensor g = Tensor::full({3}, 1.0);
  Tensor b = Tensor::zeros({3});
  Tensor y = batch_norm(x, g, b, st, BnMode::Train);
  for (double v : y.values()) CHECK(std::fabs(v) < 1e-2);
}

TEST_CASE("batch_norm gamma zero yields beta") {
  RunningStats st;
  Rng rng(5);
  Tensor x = rand_tensor({2, 3, 2, 2}, rng);
  Tensor g = Tensor::zeros({3});
  Tensor b = Tensor::full({3}, 0.75);
  Tensor y = batch_norm(x, g, b, st, BnMode::Train);
  for (double v : y.values()) CHECK(v == doctest::Approx(0.75));
}

TEST_CASE("batch_norm normalizes per channel") {
  PrecisionGuard p64(Precision::F64);
  RunningStats st;
  Rng rng(9);
  Tensor x = rand_tensor({4, 3, 2, 2}, rng);
  Tensor g = Tensor::full({3}, 1.0);
  Tensor b = Tensor::zeros({3});
  Tensor y = batch_norm(x, g, b, st, BnMode::Train);
  auto yv = y.values();
  const int64_t C = 3, plane = 4, N = 4;
  for (int64_t c = 0; c < C; ++c) {
    double mean = 0.0, var = 0.0;
    for (int64_t n = 0; n < N; ++n)
      for (int64_t i = 0; i < plane; ++i) mean += yv[((n * C + c) * plane + i)];
    mean /= N * plane;
    for (int64_t n = 0; n < N; ++n)
      for (int64_t i = 0; i < plane; ++i) {
        const double d = yv[((n * C + c) * plane + i)] - mean;
        var += d * d;
      }
    var /= N * plane;
    CHECK(std::fabs(mean) < 1e-4);
    CHECK(std::fabs(var - 1.0) < 1e-4);
  }
}

TEST_CASE("batch_norm degenerate train batch rejected") {
  RunningStats st;
  Tensor x = Tensor::zeros({1, 3, 1, 1});
  Tensor g = Tensor::full({3}, 1.0);
  Tensor b = Tensor::zeros({3});
  CHECK_THROWS_AS(batch_norm(x, g, b, st, BnMode::Train), ContractError);
  st.reset(3);
  CHECK_NOTHROW(batch_norm(x, g, b, st, BnMode::Eval));
}

TEST_CASE("cross_entropy uniform logits") {
  Tensor logits = Tensor::zeros({2, 5});
  Tensor loss = cross_entropy(logits, {1, 3});
  CHECK(loss.item() == doctest::Approx(std::log(5.0)).epsilon(1e-6));
}

TEST_CASE("cross_entropy confident prediction") {
  std::vector<double> v(3, 0.0);
  v[2] = 1000.0;
  Tensor logits({1, 3}, v);
  CHECK(cross_entropy(logits, {2}).item() < 1e-6);
}

TEST_CASE("cross_entropy matches high-precision reference") {
  PrecisionGuard p64(Precision::F64);
  Rng rng(77);
  Tensor logits = rand_tensor({4, 3}, rng);
  const std::vector<int> labels = {0, 2, 1, 1};
  CHECK(cross_entropy(logits, labels).item() ==
        doctest::Approx(cross_entropy_reference(logits, labels)).epsilon(1e-6));
}

TEST_CASE("cross_entropy label range checked") {
  Tensor logits = Tensor::zeros({2, 3});
  CHECK_THROWS_AS(cross_entropy(logits, {0, 3}), ContractError);
  CHECK_THROWS_AS(cross_entropy(logits, {-1, 0}), ContractError);
}

TEST_CASE("grad of sum of squares") {
  Tensor x({3}, {1.0, 2.0, 3.0}, true);
  Tape tape;
  TapeScope scope(&tape);
  Tensor loss = sum(mul(x, x));
  auto grads = tape.gradients(loss, {&x, 1});
  CHECK(grads[0].values()[0] == doctest::Approx(2.0));
  CHECK(grads[0].values()[1] == doctest::Approx(4.0));
  CHECK(grads[0].values()[2] == doctest::Approx(6.0));
}

TEST_CASE("grad: disjoint on-tape parameter gets zero; off-tape raises") {
  Tensor x({2}, {1.0, 2.0}, true);
  Tensor y({2}, {3.0, 4.0}, true);
  Tensor z({2}, {0.5, 0.5}, true);
  Tape tape;
  TapeScope scope(&tape);
  Tensor loss = sum(mul(x, x));
  sum(mul(y, y));  // y participates in the tape but not in the loss
  std::vector<Tensor> params = {x, y};
  auto grads = tape.gradients(loss, params);
  CHECK(grads[1].values()[0] == 0.0);
  CHECK(grads[1].values()[1] == 0.0);
  std::vector<Tensor> bad = {x, z};
  CHECK_THROWS_AS(tape.gradients(loss, bad), ContractError);
}

TEST_CASE("tape replay yields identical gradients") {
  PrecisionGuard p64(Precision::F64);
  Rng rng(3);
  Tensor a = rand_tensor({3, 3}, rng, true);
  Tensor b = rand_tensor({3, 3}, rng, true);
  Tape tape;
  TapeScope scope(&tape);
  Tensor loss = sum(mul(a, b));
  std::vector<Tensor> params = {a, b};
  auto g1 = tape.gradients(loss, params);
  auto g2 = tape.gradients(loss, params);
  CHECK(max_abs_diff(g1[0], g2[0]) == 0.0);
  CHECK(max_abs_diff(g1[1], g2[1]) == 0.0);
}

TEST_CASE("grad matches finite differences for bilinear loss") {
  PrecisionGuard p64(Precision::F64);
  Rng rng(11);
  Tensor a = rand_tensor({3, 3}, rng, true);
  Tensor b = rand_tensor({3, 3}, rng, true);
  std::vector<Tensor> params = {a, b};
  const double err = finite_diff_check([&] { return sum(mul(a, b)); }, params, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("sgd_step basics") {
  Tensor p({1}, {1.0}, true);
  Tensor g({1}, {2.0});
  std::vector<Tensor> ps = {p};
  std::vector<Tensor> gs = {g};
  sgd_step(ps, gs, 0.5);
  CHECK(ps[0].values()[0] == 0.0);

  Tensor q({3}, {0.25, -0.5, 1.0}, true);
  std::vector<Tensor> qs = {q};
  std::vector<double> before(q.values().begin(), q.values().end());
  std::vector<Tensor> gq = {Tensor({3}, {1.0, 1.0, 1.0})};
  sgd_step(qs, gq, 0.0);
  for (size_t i = 0; i < 3; ++i) CHECK(qs[0].values()[i] == before[i]);

  Tensor bad({2}, {0.0, 0.0});
  std::vector<Tensor> gbad = {bad};
  CHECK_THROWS_AS(sgd_step(qs, gbad, 0.1), ContractError);
}

TEST_CASE("one sgd step decreases a quadratic") {
  PrecisionGuard p64(Precision::F64);
  Rng rng(21);
  Tensor p = rand_tensor({8}, rng, true);
  auto eval = [&] {
    NoGradScope ng;
    return sum(mul(p, p)).item();
  };
  const double before = eval();
  Tape tape;
  {
    TapeScope scope(&tape);
    Tensor loss = sum(mul(p, p));
    auto grads = tape.gradients(loss, {&p, 1});
    std::vector<Tensor> ps = {p};
    sgd_step(ps, grads, 0.1);
  }
  CHECK(eval() < before);
}

TEST_CASE("finite_diff_check on quadratic is tight") {
  PrecisionGuard p64(Precision::F64);
  Tensor x({4}, {0.3, -0.7, 1.1, 0.05}, true);
  std::vector<Tensor> params = {x};
  const double err = finite_diff_check([&] { return sum(mul(x, x)); }, params, 1e-5);
  CHECK(err < 1e-7);
}

TEST_CASE("finite_diff_check on two-layer tanh MLP") {
  PrecisionGuard p64(Precision::F64);
  Rng rng(31);
  Tensor x = rand_tensor({4, 5}, rng);
  Tensor w1 = rand_tensor({6, 5}, rng, true);
  Tensor b1 = rand_tensor({6}, rng, true);
  Tensor w2 = rand_tensor({2, 6}, rng, true);
  Tensor b2 = rand_tensor({2}, rng, true);
  std::vector<Tensor> params = {w1, b1, w2, b2};
  auto f = [&] { return sum(linear(tanh_op(linear(x, w1, b1)), w2, b2)); };
  CHECK(finite_diff_check(f, params, 1e-5) < 1e-4);
}

TEST_CASE("finite_diff_check on conv + batch-norm + cross-entropy composite") {
  PrecisionGuard p64(Precision::F64);
  Rng rng(41);
  Tensor x = rand_tensor({3, 2, 6, 6}, rng);
  Tensor w = rand_tensor({4, 2, 3, 3}, rng, true);
  Tensor gamma = Tensor::full({4}, 1.0, true);
  Tensor beta = Tensor::zeros({4}, true);
  Tensor wout = rand_tensor({3, 4 * 6 * 6}, rng, true);
  const std::vector<int> labels = {0, 2, 1};
  std::vector<Tensor> params = {w, gamma, beta, wout};
  auto f = [&] {
    RunningStats st;  // fresh each call: keeps f deterministic
    Tensor h = batch_norm(conv2d(x, w, 1, 1), gamma, beta, st, BnMode::Train);
    Tensor logits = linear(flatten2(h), wout, Tensor());
    return cross_entropy(logits, labels);
  };
  CHECK(finite_diff_check(f, params, 1e-5) < 1e-3);
}

TEST_CASE("determinism: same seed twice gives bitwise-identical values and grads") {
  auto run = [](uint64_t seed) {
    Rng rng(seed);
    Tensor x = rand_tensor({2, 2, 4, 4}, rng);
    Tensor w = rand_tensor({3, 2, 3, 3}, rng, true);
    Tape tape;
    TapeScope scope(&tape);
    Tensor loss = sum(conv2d(x, w, 1, 1));
    auto grads = tape.gradients(loss, {&w, 1});
    std::vector<double> out(loss.values().begin(), loss.values().end());
    out.insert(out.end(), grads[0].values().begin(), grads[0].values().end());
    return out;
  };
  auto a = run(99), b = run(99);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("f32 mode quantizes values onto the float grid") {
  PrecisionGuard p32(Precision::F32);
  Rng rng(1);
  Tensor x = rand_tensor({16}, rng);
  for (double v : x.values()) CHECK(v == static_cast<double>(static_cast<float>(v)));
  Tensor y = scale(x, 1.0 / 3.0);
  for (double v : y.values()) CHECK(v == static_cast<double>(static_cast<float>(v)));
}

TEST_CASE("avg_pool, relu, reshape, permute, slice, concat backward sanity") {
  PrecisionGuard p64(Precision::F64);
  Rng rng(55);

  SUBCASE("avg_pool2d") {
    Tensor x = rand_tensor({2, 3, 4, 4}, rng, true);
    std::vector<Tensor> params = {x};
    CHECK(finite_diff_check([&] { return sum(avg_pool2d(x, 2)); }, params, 1e-5) < 1e-4);
    Tensor y = avg_pool2d(x, 4);
    CHECK(y.shape() == Shape{2, 3, 1, 1});
  }
  SUBCASE("relu") {
    Tensor x = rand_tensor({20}, rng, true);
    std::vector<Tensor> params = {x};
    CHECK(finite_diff_check([&] { return sum(mul(relu(x), relu(x))); }, params, 1e-5) < 1e-4);
  }
  SUBCASE("permute roundtrip") {
    Tensor x = rand_tensor({2, 3, 4}, rng, true);
    Tensor y = permute(permute(x, {1, 0, 2}), {1, 0, 2});
    CHECK(max_abs_diff(x, y) == 0.0);
    std::vector<Tensor> params = {x};
    CHECK(finite_diff_check(
              [&] {
                Tensor p = permute(x, {2, 1, 0});
                return sum(mul(p, p));
              },
              params, 1e-5) < 1e-4);
  }
  SUBCASE("concat + slice + repeat + select") {
    Tensor a = rand_tensor({1, 3}, rng, true);
    Tensor m = rand_tensor({4, 2}, rng, true);
    std::vector<Tensor> params = {a, m};
    auto f = [&] {
      Tensor row = select_row(m, 2);
      Tensor cat = concat_cols(repeat_row(a, 2), repeat_row(row, 2));
      Tensor s = slice_flat(cat, 1, 8);
      return sum(mul(s, s));
    };
    CHECK(finite_diff_check(f, params, 1e-5) < 1e-4);
  }
}
