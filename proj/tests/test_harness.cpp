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

#include <partialhn/partialhn.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "reports.hpp"
#include "runner.hpp"

using namespace phn;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

RunConfig tiny_run_config(const std::string& out) {
  RunConfig cfg;
  cfg.strategy = "naive";
  cfg.nf = 4;
  cfg.n_experiences = 2;
  cfg.classes_per_exp = 2;
  cfg.train_per_class = 16;
  cfg.test_per_class = 8;
  cfg.image_size = 8;
  cfg.train.epochs_per_experience = 1;
  cfg.train.batch_size = 8;
  cfg.out_dir = out;
  return cfg;
}

}  // namespace

TEST_CASE("config file parsing with comments and overrides") {
  const std::string path = "harness_cfg_test.cfg";
  std::ofstream(path) << "# comment line\n"
                         "strategy = latent-replay\n"
                         "freeze_depth = 3   # trailing comment\n"
                         "alpha = 0.25\n"
                         "lookahead = off\n";
  RunConfig cfg = RunConfig::from_file(path);
  CHECK(cfg.strategy == "latent-replay");
  CHECK(cfg.freeze_depth == 3);
  CHECK(cfg.train.alpha == doctest::Approx(0.25));
  CHECK_FALSE(cfg.train.lookahead);

  // command-line style override wins over the file value
  cfg.set("alpha", "0.5");
  CHECK(cfg.train.alpha == doctest::Approx(0.5));
  CHECK(cfg.get("alpha") == "0.5");

  CHECK_THROWS_AS(cfg.set("no_such_key", "1"), ConfigError);
  CHECK_THROWS_AS(cfg.set("alpha", "abc"), ConfigError);
  std::remove(path.c_str());
}

TEST_CASE("config validation catches bad values before any compute") {
  RunConfig cfg = tiny_run_config("x");
  CHECK_NOTHROW(cfg.validate());
  cfg.strategy = "nonsense";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_run_config("x");
  cfg.freeze_depth = 5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = tiny_run_config("x");
  cfg.stream_source = "cifar100";
  cfg.data_dir = "/definitely/missing";
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("default output root comes from the environment") {
  RunConfig cfg;
  cfg.out_dir.clear();
  setenv("PHN_OUTPUT_ROOT", "/tmp/phn_root_test", 1);
  CHECK(cfg.resolved_out_dir() == "/tmp/phn_root_test/run");
  unsetenv("PHN_OUTPUT_ROOT");
  CHECK(cfg.resolved_out_dir() == "./runs/run");
}

TEST_CASE("run writes every artifact named in the manifest") {
  const std::string out = "harness_run_a";
  fs::remove_all(out);
  RunConfig cfg = tiny_run_config(out);
  RunResult r = run(cfg);
  CHECK(r.matrix.rows() == 2);
  std::istringstream mf(slurp(out + "/manifest.txt"));
  std::string name;
  int count = 0;
  while (std::getline(mf, name)) {
    if (name.empty()) continue;
    CHECK_MESSAGE(fs::exists(out + "/" + name), "missing artifact " << name);
    ++count;
  }
  CHECK(count >= 7);
  CHECK(slurp(out + "/config_echo.cfg").find("strategy = naive") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("same config twice is bit-identical on the accuracy matrix") {
  const std::string out1 = "harness_run_b1", out2 = "harness_run_b2";
  fs::remove_all(out1);
  fs::remove_all(out2);
  RunConfig cfg = tiny_run_config(out1);
  cfg.strategy = "partial-hn";
  cfg.freeze_depth = 2;
  cfg.hyper = HyperConfig{8, 10, 8, 8, 2};
  run(cfg);
  cfg.out_dir = out2;
  run(cfg);
  CHECK(slurp(out1 + "/accuracy_matrix.csv") == slurp(out2 + "/accuracy_matrix.csv"));
  CHECK(slurp(out1 + "/provenance.txt") == slurp(out2 + "/provenance.txt"));
  fs::remove_all(out1);
  fs::remove_all(out2);
}

TEST_CASE("memory report reproduces the printed latent-replay column at scale") {
  RunConfig cfg;
  cfg.nf = 20;
  cfg.image_size = 32;
  cfg.classes_per_exp = 5;
  cfg.n_experiences = 20;
  cfg.train.buffer_capacity = 200;
  const std::string csv = memory_report_csv(cfg);
  CHECK(csv.find("latent-replay,LR-0,3x32x32,,2457600,2.34") != std::string::npos);
  CHECK(csv.find("latent-replay,LR-1,20x32x32,,16384000,15.62") != std::string::npos);
  CHECK(csv.find("latent-replay,LR-2,40x16x16,,8192000,7.81") != std::string::npos);
  CHECK(csv.find("latent-replay,LR-3,80x8x8,,4096000,3.91") != std::string::npos);
  CHECK(csv.find("latent-replay,LR-4,160x4x4,,2048000,1.95") != std::string::npos);
  CHECK(csv.find("partial-hn,HN-4,") != std::string::npos);
}

TEST_CASE("compression report is monotone in d") {
  RunConfig cfg;
  cfg.nf = 8;
  const std::string csv = compression_report_csv(cfg);
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  long long prev = -1;
  int rows = 0;
  while (std::getline(is, line)) {
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
    const long long params = std::stoll(line.substr(c1 + 1, c2 - c1 - 1));
    CHECK(params > prev);
    prev = params;
    ++rows;
  }
  CHECK(rows == 5);
}

TEST_CASE("plot series cover the lower triangle") {
  AccuracyMatrix m;
  m.add_row({0.9});
  m.add_row({0.8, 0.7});
  m.add_row({0.7, 0.6, 0.9});
  auto series = matrix_series(m);
  REQUIRE(series.size() == 3);
  CHECK(series[0].points.size() == 3);
  CHECK(series[1].points.size() == 2);
  CHECK(series[2].points.size() == 1);
  const std::string svg = render_line_svg(series, "t", "x", "y");
  size_t polylines = 0, at = 0;
  while ((at = svg.find("<polyline", at)) != std::string::npos) {
    ++polylines;
    ++at;
  }
  CHECK(polylines == 3);
}

TEST_CASE("plot report regenerates from stored artifacts and flags missing input") {
  const std::string out = "harness_run_c";
  fs::remove_all(out);
  RunConfig cfg = tiny_run_config(out);
  run(cfg);
  fs::remove(out + "/memory_report.csv");
  emit_memory_report(out);
  CHECK(fs::exists(out + "/memory_report.csv"));
  emit_plots(out);
  CHECK(fs::exists(out + "/accuracy_over_time.svg"));
  CHECK_THROWS_AS(emit_plots("missing_dir_xyz"), IoError);
  fs::remove_all(out);
}

TEST_CASE("c api: config lifecycle, run, accessors and error codes") {
  phn_config* cfg = phn_config_new();
  REQUIRE(cfg != nullptr);
  CHECK(phn_config_set(cfg, "strategy", "naive") == PHN_OK);
  CHECK(phn_config_set(cfg, "nf", "4") == PHN_OK);
  CHECK(phn_config_set(cfg, "stream.experiences", "2") == PHN_OK);
  CHECK(phn_config_set(cfg, "stream.classes_per_exp", "2") == PHN_OK);
  CHECK(phn_config_set(cfg, "stream.train_per_class", "16") == PHN_OK);
  CHECK(phn_config_set(cfg, "stream.test_per_class", "8") == PHN_OK);
  CHECK(phn_config_set(cfg, "stream.image_size", "8") == PHN_OK);
  CHECK(phn_config_set(cfg, "epochs", "1") == PHN_OK);
  CHECK(phn_config_set(cfg, "batch_size", "8") == PHN_OK);
  CHECK(phn_config_set(cfg, "out", "harness_capi_run") == PHN_OK);

  CHECK(phn_config_set(cfg, "bogus", "1") == PHN_ERR_CONFIG);
  CHECK(std::string(phn_error_message()).find("bogus") != std::string::npos);
  CHECK(phn_config_set(nullptr, "alpha", "1") == PHN_ERR_INVALID_ARGUMENT);

  char buf[64];
  CHECK(phn_config_get(cfg, "strategy", buf, sizeof(buf)) == PHN_OK);
  CHECK(std::string(buf) == "naive");
  CHECK(phn_config_get(cfg, "strategy", buf, 2) == PHN_ERR_INVALID_ARGUMENT);

  phn_result* result = nullptr;
  REQUIRE(phn_run(cfg, &result) == PHN_OK);
  REQUIRE(result != nullptr);
  int n = 0;
  CHECK(phn_result_num_experiences(result, &n) == PHN_OK);
  CHECK(n == 2);
  double v = -1.0;
  CHECK(phn_result_accuracy(result, 1, 0, &v) == PHN_OK);
  CHECK(v >= 0.0);
  CHECK(v <= 1.0);
  CHECK(phn_result_accuracy(result, 0, 1, &v) == PHN_ERR_CONTRACT);
  CHECK(phn_result_aca(result, 1, &v) == PHN_OK);
  CHECK(phn_result_forgetting(result, 0, &v) == PHN_ERR_CONTRACT);
  CHECK(phn_result_learning_accuracy(result, 1, &v) == PHN_OK);
  char dir[512];
  CHECK(phn_result_output_dir(result, dir, sizeof(dir)) == PHN_OK);
  CHECK(std::string(dir) == "harness_capi_run");

  CHECK(phn_report_memory(dir) == PHN_OK);
  CHECK(fs::exists(std::string(dir) + "/memory_report.csv"));
  CHECK(phn_report_plots("no_such_run_dir") == PHN_ERR_IO);

  phn_result_free(result);
  phn_config_free(cfg);
  fs::remove_all("harness_capi_run");
}

TEST_CASE("c api: cifar config with missing data maps to a config error") {
  phn_config* cfg = phn_config_new();
  phn_config_set(cfg, "stream.source", "cifar100");
  phn_config_set(cfg, "stream.data_dir", "/missing/data");
  phn_result* result = nullptr;
  CHECK(phn_run(cfg, &result) == PHN_ERR_CONFIG);
  CHECK(result == nullptr);
  phn_config_free(cfg);
}
