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

#include "reports.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hypernet.hpp"
#include "model.hpp"

namespace phn {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("reports: missing artifact file " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::string shape_x(const Shape& s) {
  std::string out;
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out;
}

}  // namespace

std::string memory_report_csv(const RunConfig& cfg) {
  MainModel model(cfg.classes_per_exp, cfg.nf, MainModel::ClassifierKind::Single, 0);
  std::string csv = "kind,label,exemplar_shape,params,bytes,mib\n";
  char buf[160];
  for (int k = 0; k <= 4; ++k) {
    const Shape latent = model.latent_shape(k, cfg.image_size, cfg.image_size);
    const int64_t bytes = memory_lr_bytes(latent, cfg.train.buffer_capacity);
    std::snprintf(buf, sizeof(buf), "latent-replay,LR-%d,%s,,%lld,%s\n", k,
                  shape_x(latent).c_str(), static_cast<long long>(bytes),
                  format_mib(bytes).c_str());
    csv += buf;
  }
  for (int k = 0; k <= 4; ++k) {
    std::vector<ModuleSpec> targets;
    const int from = k == 0 ? 0 : k + 1;
    for (const ModuleSpec& m : model.modules())
      if (m.segment >= from) targets.push_back(m);
    const int64_t params = hypernet_param_count(targets, cfg.hyper, cfg.n_experiences);
    const int64_t bytes = memory_hn_bytes(params);
    std::snprintf(buf, sizeof(buf), "partial-hn,HN-%d,,%lld,%lld,%s\n", k,
                  static_cast<long long>(params), static_cast<long long>(bytes),
                  format_mib(bytes).c_str());
    csv += buf;
  }
  return csv;
}

std::string compression_report_csv(const RunConfig& cfg) {
  MainModel model(cfg.classes_per_exp, cfg.nf, MainModel::ClassifierKind::Single, 0);
  // Weight-map manifest: conv and classifier heads; batch-norm slots are
  // excluded from this accounting.
  std::vector<ModuleSpec> targets;
  for (const ModuleSpec& m : model.modules())
    if (m.kind != ModuleSpec::Kind::BatchNorm) targets.push_back(m);
  auto rows = compression_rows(targets, cfg.hyper, {4, 8, 16, 32, 64}, cfg.n_experiences);
  std::string csv = "d,total_hn_params,compression_pct\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%lld,%lld,%.2f\n", static_cast<long long>(r.d),
                  static_cast<long long>(r.total_params), r.compression_pct);
    csv += buf;
  }
  return csv;
}

std::vector<PlotSeries> matrix_series(const AccuracyMatrix& m) {
  std::vector<PlotSeries> series;
  const int n = m.rows();
  for (int i = 0; i < n; ++i) {
    PlotSeries s;
    s.label = "exp " + std::to_string(i + 1);
    for (int t = i; t < n; ++t)
      s.points.emplace_back(static_cast<double>(t + 1), m.at(t, i));
    series.push_back(std::move(s));
  }
  return series;
}

std::string render_line_svg(const std::vector<PlotSeries>& series, const std::string& title,
                            const std::string& x_label, const std::string& y_label) {
  const double w = 640, h = 420, ml = 56, mr = 140, mt = 40, mb = 48;
  double xmin = 1e300, xmax = -1e300, ymin = 0.0, ymax = 1.0;
  for (const auto& s : series)
    for (auto [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (xmin > xmax) { xmin = 0; xmax = 1; }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
  auto py = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << w << " " << h << "\">\n";
  os << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title
     << "</text>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
     << h - mb << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 12
     << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label << "</text>\n";
  os << "<text x=\"16\" y=\"" << (mt + h - mb) / 2
     << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
     << (mt + h - mb) / 2 << ")\">" << y_label << "</text>\n";
  for (int g = 0; g <= 4; ++g) {
    const double y = ymin + (ymax - ymin) * g / 4.0;
    char lab[32];
    std::snprintf(lab, sizeof(lab), "%.2f", y);
    os << "<line x1=\"" << ml << "\" y1=\"" << py(y) << "\" x2=\"" << w - mr << "\" y2=\""
       << py(y) << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << ml - 6 << "\" y=\"" << py(y) + 4
       << "\" text-anchor=\"end\" font-size=\"10\">" << lab << "</text>\n";
  }
  size_t ci = 0;
  for (const auto& s : series) {
    const char* color = kColors[ci % 8];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (auto [x, y] : s.points) os << px(x) << "," << py(y) << " ";
    os << "\"/>\n";
    for (auto [x, y] : s.points)
      os << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"2.5\" fill=\"" << color
         << "\"/>\n";
    os << "<text x=\"" << w - mr + 10 << "\" y=\"" << mt + 16 + 16 * static_cast<double>(ci)
       << "\" font-size=\"11\" fill=\"" << color << "\">" << s.label << "</text>\n";
    ++ci;
  }
  os << "</svg>\n";
  return os.str();
}

void emit_memory_report(const std::string& run_dir) {
  RunConfig cfg;
  {
    std::istringstream is(read_file(run_dir + "/config_echo.cfg"));
    std::string line;
    while (std::getline(is, line)) {
      const auto eq = line.find(" = ");
      if (eq != std::string::npos) cfg.set(line.substr(0, eq), line.substr(eq + 3));
    }
  }
  std::ofstream os(run_dir + "/memory_report.csv", std::ios::binary);
  if (!os) throw IoError("reports: cannot write " + run_dir + "/memory_report.csv");
  os << memory_report_csv(cfg);
}

void emit_compression_report(const std::string& run_dir) {
  RunConfig cfg;
  {
    std::istringstream is(read_file(run_dir + "/config_echo.cfg"));
    std::string line;
    while (std::getline(is, line)) {
      const auto eq = line.find(" = ");
      if (eq != std::string::npos) cfg.set(line.substr(0, eq), line.substr(eq + 3));
    }
  }
  std::ofstream os(run_dir + "/compression_report.csv", std::ios::binary);
  if (!os) throw IoError("reports: cannot write " + run_dir + "/compression_report.csv");
  os << compression_report_csv(cfg);
}

void emit_plots(const std::string& run_dir) {
  AccuracyMatrix m = AccuracyMatrix::from_csv(read_file(run_dir + "/accuracy_matrix.csv"));
  {
    std::ofstream os(run_dir + "/accuracy_over_time.svg", std::ios::binary);
    if (!os) throw IoError("reports: cannot write " + run_dir + "/accuracy_over_time.svg");
    os << render_line_svg(matrix_series(m), "Test accuracy over the stream", "after experience",
                          "accuracy");
  }

  // Gradient-cosine diagnostic when the step log carries nonzero entries.
  std::istringstream is(read_file(run_dir + "/steps.csv"));
  std::string line;
  std::getline(is, line);  // header
  PlotSeries cos_series;
  cos_series.label = "cos(g1,g2)";
  double step_no = 0;
  bool any = false;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() < 5) continue;
    const double c = std::stod(cells[4]);
    cos_series.points.emplace_back(step_no, c);
    any = any || c != 0.0;
    step_no += 1.0;
  }
  if (any) {
    std::ofstream os(run_dir + "/cosine.svg", std::ios::binary);
    if (!os) throw IoError("reports: cannot write " + run_dir + "/cosine.svg");
    os << render_line_svg({cos_series}, "Gradient cosine similarity", "step", "cosine");
  }
}

}  // namespace phn
