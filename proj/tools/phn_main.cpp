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

// Command-line front end. Talks to the engine exclusively through the
// public C interface.

#include <partialhn/partialhn.h>

#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

namespace {

void print_usage(const char* prog) {
  std::fprintf(stderr,
               "Usage:\n"
               "  %s run --config <path> [--<key> <value>]...\n"
               "  %s run [--<key> <value>]...\n"
               "  %s report memory|compression|plot --in <run_dir>\n"
               "\n"
               "Config keys mirror the key=value file format (strategy,\n"
               "freeze_depth, stream.source, stream.type, alpha, epochs,\n"
               "seed, out, ...). Command-line values override the file.\n"
               "PHN_OUTPUT_ROOT sets the default output root.\n",
               prog, prog, prog);
}

int fail(int rc) {
  std::fprintf(stderr, "error (%s): %s\n", phn_status_name(rc), phn_error_message());
  return rc == PHN_OK ? 1 : rc;
}

int cmd_run(int argc, char** argv) {
  phn_config* cfg = phn_config_new();
  if (!cfg) {
    std::fprintf(stderr, "error: out of memory\n");
    return 1;
  }

  // First pass: config file, then overrides in order.
  for (int i = 0; i < argc; ++i) {
    if (std::strcmp(argv[i], "--config") == 0 && i + 1 < argc) {
      const int rc = phn_config_load_file(cfg, argv[i + 1]);
      if (rc != PHN_OK) {
        phn_config_free(cfg);
        return fail(rc);
      }
      break;
    }
  }
  for (int i = 0; i + 1 < argc; i += 2) {
    if (std::strncmp(argv[i], "--", 2) != 0) {
      std::fprintf(stderr, "error: expected --key value, got '%s'\n", argv[i]);
      phn_config_free(cfg);
      return 1;
    }
    const char* key = argv[i] + 2;
    if (std::strcmp(key, "config") == 0) continue;
    const int rc = phn_config_set(cfg, key, argv[i + 1]);
    if (rc != PHN_OK) {
      phn_config_free(cfg);
      return fail(rc);
    }
  }
  if (argc % 2 != 0) {
    std::fprintf(stderr, "error: dangling option '%s'\n", argv[argc - 1]);
    phn_config_free(cfg);
    return 1;
  }

  phn_result* result = nullptr;
  const int rc = phn_run(cfg, &result);
  if (rc != PHN_OK) {
    phn_config_free(cfg);
    return fail(rc);
  }

  int n = 0;
  phn_result_num_experiences(result, &n);
  char out_dir[4096];
  phn_result_output_dir(result, out_dir, sizeof(out_dir));
  std::printf("run complete: %d experiences, artifacts in %s\n", n, out_dir);
  for (int t = 0; t < n; ++t) {
    double a = 0.0, f = 0.0, l = 0.0;
    phn_result_aca(result, t, &a);
    phn_result_learning_accuracy(result, t, &l);
    if (t >= 1) {
      phn_result_forgetting(result, t, &f);
      std::printf("after exp %d: ACA %.4f  forgetting %.4f  learning_acc %.4f\n", t + 1, a, f,
                  l);
    } else {
      std::printf("after exp %d: ACA %.4f  learning_acc %.4f\n", t + 1, a, l);
    }
  }
  phn_result_free(result);
  phn_config_free(cfg);
  return 0;
}

int cmd_report(int argc, char** argv) {
  if (argc < 1) {
    std::fprintf(stderr, "error: report needs a kind (memory|compression|plot)\n");
    return 1;
  }
  const std::string kind = argv[0];
  const char* in_dir = nullptr;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::strcmp(argv[i], "--in") == 0) in_dir = argv[i + 1];
  if (!in_dir) {
    std::fprintf(stderr, "error: report needs --in <run_dir>\n");
    return 1;
  }

  int rc = PHN_ERR_INVALID_ARGUMENT;
  if (kind == "memory") rc = phn_report_memory(in_dir);
  else if (kind == "compression") rc = phn_report_compression(in_dir);
  else if (kind == "plot") rc = phn_report_plots(in_dir);
  else {
    std::fprintf(stderr, "error: unknown report kind '%s'\n", kind.c_str());
    return 1;
  }
  if (rc != PHN_OK) return fail(rc);
  std::printf("report '%s' written into %s\n", kind.c_str(), in_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    print_usage(argv[0]);
    return 1;
  }
  const std::string cmd = argv[1];
  if (cmd == "--help" || cmd == "-h" || cmd == "help") {
    print_usage(argv[0]);
    return 0;
  }
  if (cmd == "run") return cmd_run(argc - 2, argv + 2);
  if (cmd == "report") return cmd_report(argc - 2, argv + 2);
  std::fprintf(stderr, "error: unknown command '%s'\n", cmd.c_str());
  print_usage(argv[0]);
  return 1;
}
