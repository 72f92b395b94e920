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

#include "metrics.hpp"
#include "test_oracles.hpp"

using namespace phn;

namespace {

AccuracyMatrix random_matrix(Rng& rng, int n) {
  AccuracyMatrix m;
  for (int t = 0; t < n; ++t) {
    std::vector<double> row;
    for (int i = 0; i <= t; ++i) row.push_back(rng.uniform());
    m.add_row(std::move(row));
  }
  return m;
}

}  // namespace

TEST_CASE("aca basics") {
  AccuracyMatrix m;
  m.add_row({0.9});
  m.add_row({0.8, 0.6});
  CHECK(aca(m, 1) == doctest::Approx(0.7));
  AccuracyMatrix ones;
  ones.add_row({1.0});
  ones.add_row({1.0, 1.0});
  CHECK(aca(ones, 1) == 1.0);
  CHECK_THROWS_AS(aca(m, 2), ContractError);
}

TEST_CASE("forgetting basics") {
  AccuracyMatrix m;
  m.add_row({0.9});
  m.add_row({0.7, 0.8});
  CHECK(forgetting(m, 1) == doctest::Approx(0.2));

  AccuracyMatrix up;
  up.add_row({0.5});
  up.add_row({0.6, 0.7});
  up.add_row({0.7, 0.8, 0.9});
  CHECK(forgetting(up, 2) == doctest::Approx(0.0));
  CHECK_THROWS_AS(forgetting(up, 0), ContractError);
}

TEST_CASE("learning accuracy basics") {
  AccuracyMatrix m;
  m.add_row({0.9});
  m.add_row({0.6, 0.7});
  CHECK(learning_accuracy(m, 1) == doctest::Approx(0.8));
  CHECK(learning_accuracy(m, 0) == aca(m, 0));
}

TEST_CASE("metrics match brute-force oracles on random matrices") {
  Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(6));
    AccuracyMatrix m = random_matrix(rng, n);
    for (int t = 0; t < n; ++t) {
      CHECK(aca(m, t) == phn::testing::aca_oracle(m.data(), t));
      CHECK(learning_accuracy(m, t) == phn::testing::learning_accuracy_oracle(m.data(), t));
      if (t >= 1) CHECK(forgetting(m, t) == phn::testing::forgetting_oracle(m.data(), t));
    }
  }
}

TEST_CASE("matrix rejects malformed rows") {
  AccuracyMatrix m;
  CHECK_THROWS_AS(m.add_row({0.5, 0.5}), ContractError);
  m.add_row({0.5});
  CHECK_THROWS_AS(m.add_row({1.5, 0.0}), ContractError);
}

TEST_CASE("matrix CSV round-trip") {
  Rng rng(7);
  AccuracyMatrix m = random_matrix(rng, 4);
  const std::string csv = AccuracyMatrix(m).to_csv();
  CHECK(csv.rfind("after_exp,acc_exp_1,acc_exp_2,acc_exp_3,acc_exp_4\n", 0) == 0);
  AccuracyMatrix rd = AccuracyMatrix::from_csv(csv);
  REQUIRE(rd.rows() == 4);
  for (int t = 0; t < 4; ++t)
    for (int i = 0; i <= t; ++i) CHECK(rd.at(t, i) == doctest::Approx(m.at(t, i)).epsilon(1e-6));
}

TEST_CASE("memory accounting reproduces the printed table rows") {
  // CIFAR-100 section, buffer 200 (40-channel correction on the 16x16 row).
  CHECK(memory_lr_bytes({3, 32, 32}, 200) == 2457600);
  CHECK(format_mib(memory_lr_bytes({3, 32, 32}, 200)) == "2.34");
  CHECK(format_mib(memory_lr_bytes({20, 32, 32}, 200)) == "15.62");
  CHECK(memory_lr_bytes({40, 16, 16}, 200) == 8192000);
  CHECK(format_mib(memory_lr_bytes({40, 16, 16}, 200)) == "7.81");
  CHECK(format_mib(memory_lr_bytes({80, 8, 8}, 200)) == "3.91");
  CHECK(format_mib(memory_lr_bytes({160, 4, 4}, 200)) == "1.95");

  // 64x64 section, buffer 400.
  CHECK(format_mib(memory_lr_bytes({3, 64, 64}, 400)) == "18.75");
  CHECK(format_mib(memory_lr_bytes({20, 64, 64}, 400)) == "125.00");
  CHECK(format_mib(memory_lr_bytes({40, 32, 32}, 400)) == "62.50");
  CHECK(format_mib(memory_lr_bytes({80, 16, 16}, 400)) == "31.25");
  CHECK(format_mib(memory_lr_bytes({160, 8, 8}, 400)) == "15.62");

  // Hypernetwork rows from printed parameter counts.
  CHECK(memory_hn_bytes(533922) == 2135688);
  CHECK(format_mib(memory_hn_bytes(533922)) == "2.04");
  CHECK(format_mib(memory_hn_bytes(1272877)) == "4.86");
  CHECK(format_mib(memory_hn_bytes(1217122)) == "4.64");
  CHECK(format_mib(memory_hn_bytes(1119522)) == "4.27");
  CHECK(format_mib(memory_hn_bytes(924322)) == "3.53");

  CHECK_THROWS_AS(memory_lr_bytes({0, 4, 4}, 200), ContractError);
  CHECK_THROWS_AS(memory_hn_bytes(0), ContractError);
}
