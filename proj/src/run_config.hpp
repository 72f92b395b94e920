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

#ifndef PHN_RUN_CONFIG_HPP
#define PHN_RUN_CONFIG_HPP

#include <string>

#include "strategy.hpp"

namespace phn {

/// Flat key=value run configuration. Precedence: command-line overrides >
/// config file > defaults.
struct RunConfig {
  std::string strategy = "partial-hn";  // partial-hn | latent-replay | naive
  int freeze_depth = 2;
  int nf = 8;

  std::string stream_source = "synthetic";  // synthetic | cifar100
  std::string stream_type = "split";        // split | noisy | two-experience
  int n_experiences = 4;
  int classes_per_exp = 5;
  int train_per_class = 200;  // synthetic sources
  int test_per_class = 40;
  int image_size = 16;
  bool noisy_transforms = true;  // noisy type: false builds the clean twin
  std::string data_dir;          // cifar100: expects train.bin / test.bin

  HyperConfig hyper;
  TrainConfig train;

  std::string out_dir;            // empty: $PHN_OUTPUT_ROOT (or ./runs) + /run
  std::string precision = "f32";  // f32 | f64

  /// Parses a key=value file ('#' comments, blank lines ignored).
  static RunConfig from_file(const std::string& path);
  /// Applies one key=value pair; unknown keys raise ConfigError.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  /// Canonical echo of every key, one per line, stable order.
  std::string echo() const;
  void validate() const;
  std::string resolved_out_dir() const;
};

}  // namespace phn

#endif  // PHN_RUN_CONFIG_HPP
