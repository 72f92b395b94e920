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

#ifndef PHN_REPORTS_HPP
#define PHN_REPORTS_HPP

#include "metrics.hpp"
#include "run_config.hpp"

namespace phn {

/// Memory accounting table: latent-replay rows (exemplar buffer at every
/// freeze depth for the configured input size) and hypernetwork rows (the
/// snapshot a partial hypernetwork must retain at every depth).
std::string memory_report_csv(const RunConfig& cfg);

/// Hypernetwork parameter totals for lookup widths {4,8,16,32,64} over the
/// weight-map manifest (conv + classifier heads, trunk, task embeddings) of
/// the full model, anchored at 0% compression for d=64.
std::string compression_report_csv(const RunConfig& cfg);

struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

/// One series per experience: its test accuracy after each later experience.
std::vector<PlotSeries> matrix_series(const AccuracyMatrix& m);

/// Minimal static line plot (SVG).
std::string render_line_svg(const std::vector<PlotSeries>& series, const std::string& title,
                            const std::string& x_label, const std::string& y_label);

// Report generation from stored run artifacts (missing files raise IoError).
void emit_memory_report(const std::string& run_dir);
void emit_compression_report(const std::string& run_dir);
void emit_plots(const std::string& run_dir);

}  // namespace phn

#endif  // PHN_REPORTS_HPP
