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

#include "partialhn/partialhn.h"

#include <cstring>
#include <string>

#include "reports.hpp"
#include "runner.hpp"

struct phn_config {
  phn::RunConfig cfg;
};

struct phn_result {
  phn::RunResult result;
};

namespace {

thread_local std::string g_error;

int set_error(int code, const std::string& msg) {
  g_error = msg;
  return code;
}

/// Runs fn, mapping C++ error types onto status codes.
template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return PHN_OK;
  } catch (const phn::ContractError& e) {
    return set_error(PHN_ERR_CONTRACT, e.what());
  } catch (const phn::ConfigError& e) {
    return set_error(PHN_ERR_CONFIG, e.what());
  } catch (const phn::IoError& e) {
    return set_error(PHN_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return set_error(PHN_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(PHN_ERR_INTERNAL, "unknown error");
  }
}

int copy_out(const std::string& s, char* buf, size_t cap) {
  if (!buf || cap == 0) return set_error(PHN_ERR_INVALID_ARGUMENT, "null or empty buffer");
  if (s.size() + 1 > cap)
    return set_error(PHN_ERR_INVALID_ARGUMENT,
                     "buffer too small: need " + std::to_string(s.size() + 1) + " bytes");
  std::memcpy(buf, s.c_str(), s.size() + 1);
  return PHN_OK;
}

}  // namespace

extern "C" {

phn_config* phn_config_new(void) { return new (std::nothrow) phn_config(); }

void phn_config_free(phn_config* cfg) { delete cfg; }

int phn_config_load_file(phn_config* cfg, const char* path) {
  if (!cfg || !path) return set_error(PHN_ERR_INVALID_ARGUMENT, "null config or path");
  return guarded([&] { cfg->cfg = phn::RunConfig::from_file(path); });
}

int phn_config_set(phn_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return set_error(PHN_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { cfg->cfg.set(key, value); });
}

int phn_config_get(const phn_config* cfg, const char* key, char* buf, size_t cap) {
  if (!cfg || !key) return set_error(PHN_ERR_INVALID_ARGUMENT, "null argument");
  std::string value;
  const int rc = guarded([&] { value = cfg->cfg.get(key); });
  if (rc != PHN_OK) return rc;
  return copy_out(value, buf, cap);
}

int phn_run(const phn_config* cfg, phn_result** out) {
  if (!cfg || !out) return set_error(PHN_ERR_INVALID_ARGUMENT, "null config or result slot");
  *out = nullptr;
  return guarded([&] {
    auto result = std::make_unique<phn_result>();
    result->result = phn::run(cfg->cfg);
    *out = result.release();
  });
}

void phn_result_free(phn_result* result) { delete result; }

int phn_result_num_experiences(const phn_result* result, int* out) {
  if (!result || !out) return set_error(PHN_ERR_INVALID_ARGUMENT, "null argument");
  *out = result->result.matrix.rows();
  return PHN_OK;
}

int phn_result_accuracy(const phn_result* result, int after_exp, int exp, double* out) {
  if (!result || !out) return set_error(PHN_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = result->result.matrix.at(after_exp, exp); });
}

int phn_result_aca(const phn_result* result, int after_exp, double* out) {
  if (!result || !out) return set_error(PHN_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = phn::aca(result->result.matrix, after_exp); });
}

int phn_result_forgetting(const phn_result* result, int after_exp, double* out) {
  if (!result || !out) return set_error(PHN_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = phn::forgetting(result->result.matrix, after_exp); });
}

int phn_result_learning_accuracy(const phn_result* result, int after_exp, double* out) {
  if (!result || !out) return set_error(PHN_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = phn::learning_accuracy(result->result.matrix, after_exp); });
}

int phn_result_output_dir(const phn_result* result, char* buf, size_t cap) {
  if (!result) return set_error(PHN_ERR_INVALID_ARGUMENT, "null result");
  return copy_out(result->result.out_dir, buf, cap);
}

int phn_report_memory(const char* run_dir) {
  if (!run_dir) return set_error(PHN_ERR_INVALID_ARGUMENT, "null run_dir");
  return guarded([&] { phn::emit_memory_report(run_dir); });
}

int phn_report_compression(const char* run_dir) {
  if (!run_dir) return set_error(PHN_ERR_INVALID_ARGUMENT, "null run_dir");
  return guarded([&] { phn::emit_compression_report(run_dir); });
}

int phn_report_plots(const char* run_dir) {
  if (!run_dir) return set_error(PHN_ERR_INVALID_ARGUMENT, "null run_dir");
  return guarded([&] { phn::emit_plots(run_dir); });
}

const char* phn_error_message(void) { return g_error.c_str(); }

const char* phn_status_name(int status) {
  switch (status) {
    case PHN_OK: return "PHN_OK";
    case PHN_ERR_INVALID_ARGUMENT: return "PHN_ERR_INVALID_ARGUMENT";
    case PHN_ERR_CONTRACT: return "PHN_ERR_CONTRACT";
    case PHN_ERR_IO: return "PHN_ERR_IO";
    case PHN_ERR_CONFIG: return "PHN_ERR_CONFIG";
    case PHN_ERR_INTERNAL: return "PHN_ERR_INTERNAL";
    default: return "PHN_ERR_UNKNOWN";
  }
}

}  // extern "C"
