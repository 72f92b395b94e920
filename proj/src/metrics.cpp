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

#include "metrics.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace phn {

namespace {
constexpr const char* kModule = "metrics";
}

void AccuracyMatrix::add_row(std::vector<double> row) {
  if (row.size() != r_.size() + 1)
    throw ContractError(kModule, "add_row",
                        "row " + std::to_string(r_.size()) + " must have " +
                            std::to_string(r_.size() + 1) + " entries, got " +
                            std::to_string(row.size()));
  for (double v : row)
    if (v < 0.0 || v > 1.0)
      throw ContractError(kModule, "add_row", "accuracy " + std::to_string(v) + " outside [0,1]");
  r_.push_back(std::move(row));
}

double AccuracyMatrix::at(int t, int i) const {
  if (t < 0 || t >= rows() || i < 0 || i > t)
    throw ContractError(kModule, "at",
                        "index (" + std::to_string(t) + "," + std::to_string(i) +
                            ") outside the lower triangle of " + std::to_string(rows()) +
                            " rows");
  return r_[static_cast<size_t>(t)][static_cast<size_t>(i)];
}

std::string AccuracyMatrix::to_csv() const {
  std::ostringstream os;
  os << "after_exp";
  const int n = rows();
  for (int i = 1; i <= n; ++i) os << ",acc_exp_" << i;
  os << "\n";
  char buf[32];
  for (int t = 0; t < n; ++t) {
    os << (t + 1);
    for (int i = 0; i < n; ++i) {
      os << ",";
      if (i <= t) {
        std::snprintf(buf, sizeof(buf), "%.6f", r_[static_cast<size_t>(t)][static_cast<size_t>(i)]);
        os << buf;
      }
    }
    os << "\n";
  }
  return os.str();
}

AccuracyMatrix AccuracyMatrix::from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw IoError("metrics: empty accuracy matrix CSV");
  AccuracyMatrix m;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    bool first = true;
    while (std::getline(ls, cell, ',')) {
      if (first) {
        first = false;
        continue;
      }
      if (cell.empty()) break;
      row.push_back(std::stod(cell));
    }
    m.add_row(std::move(row));
  }
  return m;
}

double aca(const AccuracyMatrix& m, int t) {
  if (t < 0 || t >= m.rows())
    throw ContractError(kModule, "aca", "row " + std::to_string(t) + " not complete");
  double s = 0.0;
  for (int i = 0; i <= t; ++i) s += m.at(t, i);
  return s / static_cast<double>(t + 1);
}

double forgetting(const AccuracyMatrix& m, int t) {
  if (t < 1 || t >= m.rows())
    throw ContractError(kModule, "forgetting",
                        "need at least two completed experiences, got t=" + std::to_string(t));
  double s = 0.0;
  for (int i = 0; i < t; ++i) {
    double peak = 0.0;
    for (int j = i; j <= t; ++j) peak = std::max(peak, m.at(j, i));
    s += peak - m.at(t, i);
  }
  return s / static_cast<double>(t);
}

double learning_accuracy(const AccuracyMatrix& m, int t) {
  if (t < 0 || t >= m.rows())
    throw ContractError(kModule, "learning_accuracy", "row " + std::to_string(t) + " missing");
  double s = 0.0;
  for (int i = 0; i <= t; ++i) s += m.at(i, i);
  return s / static_cast<double>(t + 1);
}

int64_t memory_lr_bytes(const Shape& latent_shape, int64_t buffer_size) {
  if (buffer_size <= 0) throw ContractError(kModule, "memory_lr", "buffer size must be positive");
  const int64_t n = numel(latent_shape);
  if (n <= 0) throw ContractError(kModule, "memory_lr", "latent shape must be positive");
  return n * buffer_size * 4;
}

int64_t memory_hn_bytes(int64_t param_count) {
  if (param_count <= 0) throw ContractError(kModule, "memory_hn", "param count must be positive");
  return param_count * 4;
}

std::string format_mib(int64_t bytes) {
  // Exact for power-of-two denominators; ties round half to even, which is
  // what reproduces 15.625 -> "15.62".
  const double hundredths = static_cast<double>(bytes) * 100.0 / (1024.0 * 1024.0);
  const double rounded = std::nearbyint(hundredths);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", rounded / 100.0);
  return buf;
}

}  // namespace phn
