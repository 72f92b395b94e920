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

#include "run_config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace phn {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

bool parse_flag(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw ConfigError("config: " + key + " expects on/off, got '" + v + "'");
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int out = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " expects an integer, got '" + v + "'");
  }
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config: " + key + " expects a number, got '" + v + "'");
  }
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("config: cannot open " + path);
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: " + path + ":" + std::to_string(line_no) +
                        ": expected key = value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& v) {
  if (key == "strategy") strategy = v;
  else if (key == "freeze_depth") freeze_depth = parse_int(key, v);
  else if (key == "nf") nf = parse_int(key, v);
  else if (key == "stream.source") stream_source = v;
  else if (key == "stream.type") stream_type = v;
  else if (key == "stream.experiences") n_experiences = parse_int(key, v);
  else if (key == "stream.classes_per_exp") classes_per_exp = parse_int(key, v);
  else if (key == "stream.train_per_class") train_per_class = parse_int(key, v);
  else if (key == "stream.test_per_class") test_per_class = parse_int(key, v);
  else if (key == "stream.image_size") image_size = parse_int(key, v);
  else if (key == "stream.noisy") noisy_transforms = parse_flag(key, v);
  else if (key == "stream.data_dir") data_dir = v;
  else if (key == "hn.embed_dim") hyper.embed_dim = parse_int(key, v);
  else if (key == "hn.hidden1") hyper.hidden1 = parse_int(key, v);
  else if (key == "hn.hidden2") hyper.hidden2 = parse_int(key, v);
  else if (key == "hn.h_out") hyper.h_out = parse_int(key, v);
  else if (key == "hn.lookup_dim") hyper.lookup_dim = parse_int(key, v);
  else if (key == "alpha") train.alpha = parse_real(key, v);
  else if (key == "beta") train.beta = parse_real(key, v);
  else if (key == "lambda") train.lambda = parse_real(key, v);
  else if (key == "epochs") train.epochs_per_experience = parse_int(key, v);
  else if (key == "batch_size") train.batch_size = parse_int(key, v);
  else if (key == "seed") train.seed = static_cast<uint64_t>(std::stoull(v));
  else if (key == "lookahead") train.lookahead = parse_flag(key, v);
  else if (key == "replay_coefficient") train.replay_coefficient = parse_real(key, v);
  else if (key == "buffer_capacity") train.buffer_capacity = parse_int(key, v);
  else if (key == "early_stop") train.early_stop = parse_flag(key, v);
  else if (key == "out") out_dir = v;
  else if (key == "precision") precision = v;
  else throw ConfigError("config: unknown key '" + key + "'");
}

std::string RunConfig::get(const std::string& key) const {
  std::istringstream is(echo());
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos && line.substr(0, eq) == key) return line.substr(eq + 3);
  }
  throw ConfigError("config: unknown key '" + key + "'");
}

std::string RunConfig::echo() const {
  std::ostringstream os;
  auto flag = [](bool b) { return b ? "on" : "off"; };
  os << "strategy = " << strategy << "\n";
  os << "freeze_depth = " << freeze_depth << "\n";
  os << "nf = " << nf << "\n";
  os << "stream.source = " << stream_source << "\n";
  os << "stream.type = " << stream_type << "\n";
  os << "stream.experiences = " << n_experiences << "\n";
  os << "stream.classes_per_exp = " << classes_per_exp << "\n";
  os << "stream.train_per_class = " << train_per_class << "\n";
  os << "stream.test_per_class = " << test_per_class << "\n";
  os << "stream.image_size = " << image_size << "\n";
  os << "stream.noisy = " << flag(noisy_transforms) << "\n";
  os << "stream.data_dir = " << data_dir << "\n";
  os << "hn.embed_dim = " << hyper.embed_dim << "\n";
  os << "hn.hidden1 = " << hyper.hidden1 << "\n";
  os << "hn.hidden2 = " << hyper.hidden2 << "\n";
  os << "hn.h_out = " << hyper.h_out << "\n";
  os << "hn.lookup_dim = " << hyper.lookup_dim << "\n";
  os << "alpha = " << train.alpha << "\n";
  os << "beta = " << train.beta << "\n";
  os << "lambda = " << train.lambda << "\n";
  os << "epochs = " << train.epochs_per_experience << "\n";
  os << "batch_size = " << train.batch_size << "\n";
  os << "seed = " << train.seed << "\n";
  os << "lookahead = " << flag(train.lookahead) << "\n";
  os << "replay_coefficient = " << train.replay_coefficient << "\n";
  os << "buffer_capacity = " << train.buffer_capacity << "\n";
  os << "early_stop = " << flag(train.early_stop) << "\n";
  os << "out = " << out_dir << "\n";
  os << "precision = " << precision << "\n";
  return os.str();
}

void RunConfig::validate() const {
  if (strategy != "partial-hn" && strategy != "latent-replay" && strategy != "naive")
    throw ConfigError("config: unknown strategy '" + strategy + "'");
  if (freeze_depth < 0 || freeze_depth > 4)
    throw ConfigError("config: freeze_depth must be in [0,4]");
  if (nf < 1) throw ConfigError("config: nf must be >= 1");
  if (stream_source != "synthetic" && stream_source != "cifar100")
    throw ConfigError("config: unknown stream.source '" + stream_source + "'");
  if (stream_type != "split" && stream_type != "noisy" && stream_type != "two-experience")
    throw ConfigError("config: unknown stream.type '" + stream_type + "'");
  if (stream_source == "cifar100") {
    if (data_dir.empty()) throw ConfigError("config: cifar100 source needs stream.data_dir");
    for (const char* f : {"train.bin", "test.bin"}) {
      const std::string p = data_dir + "/" + f;
      if (!std::filesystem::exists(p)) throw ConfigError("config: missing data file " + p);
    }
  }
  if (stream_source == "synthetic" && image_size < 8)
    throw ConfigError("config: stream.image_size must be >= 8");
  if (n_experiences < 1 || classes_per_exp < 2)
    throw ConfigError("config: need >= 1 experiences and >= 2 classes per experience");
  if (precision != "f32" && precision != "f64")
    throw ConfigError("config: precision must be f32 or f64");
  train.validate();
}

std::string RunConfig::resolved_out_dir() const {
  if (!out_dir.empty()) return out_dir;
  const char* root = std::getenv("PHN_OUTPUT_ROOT");
  return std::string(root ? root : "./runs") + "/run";
}

}  // namespace phn
