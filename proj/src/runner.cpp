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

#include "runner.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include "reports.hpp"

namespace phn {

namespace {

namespace fs = std::filesystem;

void write_file(const std::string& path, const std::string& content,
                std::vector<std::string>* manifest) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("runner: cannot write " + path);
  os << content;
  if (manifest) manifest->push_back(fs::path(path).filename().string());
}

uint64_t model_seed(const RunConfig& cfg) {
  return Rng(cfg.train.seed).child("model_init").next_u64();
}

}  // namespace

Stream build_stream(const RunConfig& cfg) {
  if (cfg.stream_source == "cifar100") {
    Dataset train = load_cifar100_binary(cfg.data_dir + "/train.bin");
    Dataset test = load_cifar100_binary(cfg.data_dir + "/test.bin");
    if (cfg.stream_type == "noisy")
      return make_noisy_stream(train, test, cfg.train.seed, cfg.noisy_transforms);
    return make_split_stream(train, test, cfg.n_experiences, cfg.classes_per_exp, cfg.train.seed);
  }

  // synthetic
  if (cfg.stream_type == "two-experience") {
    const uint64_t s = cfg.train.seed;
    Dataset a_tr = make_synthetic_dataset(cfg.classes_per_exp, cfg.train_per_class,
                                          cfg.image_size, s, "train");
    Dataset a_te = make_synthetic_dataset(cfg.classes_per_exp, cfg.test_per_class, cfg.image_size,
                                          s, "test");
    Dataset b_tr = make_synthetic_dataset(cfg.classes_per_exp, cfg.train_per_class,
                                          cfg.image_size, s + 1, "train");
    Dataset b_te = make_synthetic_dataset(cfg.classes_per_exp, cfg.test_per_class, cfg.image_size,
                                          s + 1, "test");
    Stream stream = make_two_experience_stream(std::move(a_tr), std::move(a_te), std::move(b_tr),
                                               std::move(b_te));
    stream.provenance += " source=synthetic seed=" + std::to_string(s);
    return stream;
  }

  const int num_classes = cfg.stream_type == "noisy"
                              ? std::max(20, cfg.n_experiences * cfg.classes_per_exp)
                              : cfg.n_experiences * cfg.classes_per_exp;
  Dataset train = make_synthetic_dataset(num_classes, cfg.train_per_class, cfg.image_size,
                                         cfg.train.seed, "train");
  Dataset test = make_synthetic_dataset(num_classes, cfg.test_per_class, cfg.image_size,
                                        cfg.train.seed, "test");
  Stream stream = cfg.stream_type == "noisy"
                      ? make_noisy_stream(train, test, cfg.train.seed, cfg.noisy_transforms)
                      : make_split_stream(train, test, cfg.n_experiences, cfg.classes_per_exp,
                                          cfg.train.seed);
  stream.provenance = "source=synthetic " + stream.provenance;
  return stream;
}

std::unique_ptr<Strategy> build_strategy(const RunConfig& cfg) {
  const uint64_t seed = model_seed(cfg);
  if (cfg.strategy == "partial-hn") {
    MainModel m(cfg.classes_per_exp, cfg.nf, MainModel::ClassifierKind::Single, seed);
    return std::make_unique<PartialHNStrategy>(decompose(std::move(m), cfg.freeze_depth),
                                               cfg.hyper, cfg.train);
  }
  if (cfg.strategy == "latent-replay") {
    MainModel m(cfg.classes_per_exp, cfg.nf, MainModel::ClassifierKind::MultiHead, seed);
    return std::make_unique<LatentReplayStrategy>(decompose(std::move(m), cfg.freeze_depth),
                                                  cfg.train);
  }
  MainModel m(cfg.classes_per_exp, cfg.nf, MainModel::ClassifierKind::MultiHead, seed);
  return std::make_unique<NaiveStrategy>(std::move(m), cfg.train);
}

RunResult run(const RunConfig& cfg) {
  cfg.validate();
  PrecisionGuard precision(cfg.precision == "f64" ? Precision::F64 : Precision::F32);

  const std::string out = cfg.resolved_out_dir();
  fs::create_directories(out);
  std::vector<std::string> manifest;

  Stream stream = build_stream(cfg);
  std::unique_ptr<Strategy> strategy = build_strategy(cfg);

  std::ofstream steps(out + "/steps.csv", std::ios::binary);
  if (!steps) throw IoError("runner: cannot write " + out + "/steps.csv");
  steps << "step,experience,loss_ce,loss_h,cosine,wall_ms\n";
  char buf[160];
  StepLogger logger = [&](const StepRecord& r) {
    std::snprintf(buf, sizeof(buf), "%lld,%d,%.6f,%.6f,%.6f,%.3f\n",
                  static_cast<long long>(r.step), r.experience + 1, r.loss_ce, r.loss_h, r.cosine,
                  r.wall_ms);
    steps << buf;
  };

  RunResult result;
  result.out_dir = out;
  for (size_t i = 0; i < stream.experiences.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    strategy->train_experience(stream.experiences[i], static_cast<int>(i), logger);
    result.matrix.add_row(evaluate_row(*strategy, stream, static_cast<int>(i)));
    result.wall_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  steps.close();
  manifest.push_back("steps.csv");

  write_file(out + "/config_echo.cfg", cfg.echo(), &manifest);
  write_file(out + "/provenance.txt", stream.provenance + "\n", &manifest);
  write_file(out + "/accuracy_matrix.csv", result.matrix.to_csv(), &manifest);

  {
    std::string csv = "after_exp,aca,forgetting,learning_accuracy,wall_seconds\n";
    for (int t = 0; t < result.matrix.rows(); ++t) {
      std::snprintf(buf, sizeof(buf), "%d,%.6f,", t + 1, aca(result.matrix, t));
      csv += buf;
      if (t >= 1) {
        std::snprintf(buf, sizeof(buf), "%.6f", forgetting(result.matrix, t));
        csv += buf;
      }
      std::snprintf(buf, sizeof(buf), ",%.6f,%.3f\n", learning_accuracy(result.matrix, t),
                    result.wall_seconds[static_cast<size_t>(t)]);
      csv += buf;
    }
    write_file(out + "/metrics_summary.csv", csv, &manifest);
  }

  write_file(out + "/memory_report.csv", memory_report_csv(cfg), &manifest);
  if (cfg.strategy == "partial-hn")
    write_file(out + "/compression_report.csv", compression_report_csv(cfg), &manifest);

  strategy->save_checkpoints(out);
  manifest.push_back("model.ckpt");
  if (cfg.strategy == "partial-hn") manifest.push_back("hypernet.ckpt");

  std::string mf;
  for (const auto& f : manifest) mf += f + "\n";
  mf += "manifest.txt\n";
  write_file(out + "/manifest.txt", mf, nullptr);
  return result;
}

}  // namespace phn
