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

#ifndef PHN_RUNNER_HPP
#define PHN_RUNNER_HPP

#include <memory>

#include "metrics.hpp"
#include "run_config.hpp"

namespace phn {

struct RunResult {
  AccuracyMatrix matrix;
  std::vector<double> wall_seconds;  // per experience
  std::string out_dir;
};

/// Builds the stream described by the config (experiences, transforms,
/// provenance).
Stream build_stream(const RunConfig& cfg);

/// Builds the configured strategy over a freshly initialized model.
std::unique_ptr<Strategy> build_strategy(const RunConfig& cfg);

/// Sequential experience loop: train on e_i, evaluate on every test set
/// j <= i, append the accuracy row, then write all artifacts (config echo,
/// provenance, accuracy matrix, metrics summary, step log, memory and
/// compression reports, checkpoints, manifest) into the output directory.
RunResult run(const RunConfig& cfg);

}  // namespace phn

#endif  // PHN_RUNNER_HPP
