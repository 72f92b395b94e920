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

/* Public C interface of the partialhn continual-learning engine.
 *
 * All entry points return a phn_status code (PHN_OK on success). On failure
 * phn_error_message() returns a thread-local diagnostic naming the module
 * and operation that rejected the call. Handles are opaque; every *_new has
 * a matching *_free, and passing NULL where a handle is required yields
 * PHN_ERR_INVALID_ARGUMENT.
 */

#ifndef PARTIALHN_H
#define PARTIALHN_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum phn_status {
  PHN_OK = 0,
  PHN_ERR_INVALID_ARGUMENT = 1,
  PHN_ERR_CONTRACT = 2, /* module operation contract violated */
  PHN_ERR_IO = 3,
  PHN_ERR_CONFIG = 4,
  PHN_ERR_INTERNAL = 5
} phn_status;

typedef struct phn_config phn_config;
typedef struct phn_result phn_result;

/* --- configuration ------------------------------------------------------ */

phn_config* phn_config_new(void);
void phn_config_free(phn_config* cfg);

/* Loads key=value lines from a file into an existing config. */
int phn_config_load_file(phn_config* cfg, const char* path);
/* Sets one key (e.g. "strategy", "stream.type", "alpha"). */
int phn_config_set(phn_config* cfg, const char* key, const char* value);
/* Copies the value of one key into buf (NUL-terminated, cap bytes). */
int phn_config_get(const phn_config* cfg, const char* key, char* buf, size_t cap);

/* --- running ------------------------------------------------------------ */

/* Runs the full experience loop and writes every artifact into the
 * configured output directory. */
int phn_run(const phn_config* cfg, phn_result** out);
void phn_result_free(phn_result* result);

int phn_result_num_experiences(const phn_result* result, int* out);
/* Accuracy on test set `exp` after training through `after_exp` (both
 * 0-based, exp <= after_exp). */
int phn_result_accuracy(const phn_result* result, int after_exp, int exp, double* out);
int phn_result_aca(const phn_result* result, int after_exp, double* out);
/* after_exp >= 1. */
int phn_result_forgetting(const phn_result* result, int after_exp, double* out);
int phn_result_learning_accuracy(const phn_result* result, int after_exp, double* out);
int phn_result_output_dir(const phn_result* result, char* buf, size_t cap);

/* --- reports over stored artifacts -------------------------------------- */

/* Each reads <run_dir>/config_echo.cfg or other stored artifacts and writes
 * the report files into run_dir. */
int phn_report_memory(const char* run_dir);
int phn_report_compression(const char* run_dir);
int phn_report_plots(const char* run_dir);

/* --- diagnostics --------------------------------------------------------- */

/* Thread-local message describing the most recent failure. */
const char* phn_error_message(void);
const char* phn_status_name(int status);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* PARTIALHN_H */
