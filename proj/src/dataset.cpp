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

#include "dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace phn {

namespace {
constexpr const char* kModule = "streams";
constexpr int64_t kCifarRecord = 3074;
constexpr int64_t kCifarPixels = 3072;
}  // namespace

void Dataset::validate(const char* op) const {
  if (!images.defined()) throw ContractError(kModule, op, "dataset has no images");
  if (images.rank() != 4 || images.dim(1) != 3)
    throw ContractError(kModule, op, "images must be [N,3,H,W], got " + shape_str(images.shape()));
  if (static_cast<int64_t>(labels.size()) != images.dim(0))
    throw ContractError(kModule, op,
                        "label count " + std::to_string(labels.size()) + " != image count " +
                            std::to_string(images.dim(0)));
  for (int l : labels)
    if (l < 0 || l >= num_classes)
      throw ContractError(kModule, op,
                          "label " + std::to_string(l) + " outside [0," +
                              std::to_string(num_classes) + ")");
}

std::pair<Tensor, std::vector<int>> gather(const Dataset& ds, const std::vector<int64_t>& indices) {
  const int64_t per = ds.images.size() / ds.images.dim(0);
  std::vector<double> out(static_cast<size_t>(per) * indices.size());
  std::vector<int> labels;
  labels.reserve(indices.size());
  auto iv = ds.images.values();
  for (size_t i = 0; i < indices.size(); ++i) {
    const int64_t idx = indices[i];
    std::copy(&iv[static_cast<size_t>(idx * per)], &iv[static_cast<size_t>(idx * per)] + per,
              &out[i * static_cast<size_t>(per)]);
    labels.push_back(ds.labels[static_cast<size_t>(idx)]);
  }
  Shape shape = ds.images.shape();
  shape[0] = static_cast<int64_t>(indices.size());
  return {Tensor(std::move(shape), std::move(out)), std::move(labels)};
}

Dataset load_cifar100_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  if (!is) throw IoError("streams.load_cifar100_binary: cannot open " + path);
  const int64_t len = static_cast<int64_t>(is.tellg());
  if (len % kCifarRecord != 0)
    throw IoError("streams.load_cifar100_binary: file length " + std::to_string(len) +
                  " is not a multiple of " + std::to_string(kCifarRecord) +
                  " (first incomplete record at byte offset " +
                  std::to_string((len / kCifarRecord) * kCifarRecord) + ")");
  const int64_t n = len / kCifarRecord;
  is.seekg(0);

  std::vector<unsigned char> rec(static_cast<size_t>(kCifarRecord));
  std::vector<double> images(static_cast<size_t>(n * kCifarPixels));
  std::vector<int> labels(static_cast<size_t>(n));
  int max_label = 0;
  for (int64_t i = 0; i < n; ++i) {
    is.read(reinterpret_cast<char*>(rec.data()), kCifarRecord);
    if (!is) throw IoError("streams.load_cifar100_binary: short read in " + path);
    labels[static_cast<size_t>(i)] = rec[1];  // fine label
    max_label = std::max(max_label, static_cast<int>(rec[1]));
    double* dst = &images[static_cast<size_t>(i * kCifarPixels)];
    for (int64_t p = 0; p < kCifarPixels; ++p)
      dst[p] = quantize_value(static_cast<double>(rec[static_cast<size_t>(2 + p)]) / 255.0);
  }

  Dataset ds;
  ds.images = Tensor({n, 3, 32, 32}, std::move(images));
  ds.labels = std::move(labels);
  ds.num_classes = max_label + 1;
  ds.validate("load_cifar100_binary");
  return ds;
}

namespace {

// Bilinear upsample of a g x g grid to hw x hw.
double grid_sample(const std::vector<double>& grid, int g, int64_t hw, int64_t y, int64_t x) {
  const double sy = (static_cast<double>(y) + 0.5) * g / static_cast<double>(hw) - 0.5;
  const double sx = (static_cast<double>(x) + 0.5) * g / static_cast<double>(hw) - 0.5;
  const double cy = std::clamp(sy, 0.0, static_cast<double>(g - 1));
  const double cx = std::clamp(sx, 0.0, static_cast<double>(g - 1));
  const int y0 = static_cast<int>(cy), x0 = static_cast<int>(cx);
  const int y1 = std::min(y0 + 1, g - 1), x1 = std::min(x0 + 1, g - 1);
  const double fy = cy - y0, fx = cx - x0;
  return grid[static_cast<size_t>(y0 * g + x0)] * (1 - fy) * (1 - fx) +
         grid[static_cast<size_t>(y0 * g + x1)] * (1 - fy) * fx +
         grid[static_cast<size_t>(y1 * g + x0)] * fy * (1 - fx) +
         grid[static_cast<size_t>(y1 * g + x1)] * fy * fx;
}

}  // namespace

Dataset make_synthetic_dataset(int num_classes, int per_class, int64_t hw, uint64_t seed,
                               std::string_view subset, const SyntheticStyle& style) {
  if (hw < 8) throw ContractError(kModule, "make_synthetic_dataset", "size must be >= 8");
  if (num_classes < 1 || per_class < 1)
    throw ContractError(kModule, "make_synthetic_dataset", "need positive class/sample counts");

  constexpr int kGrid = 4;
  const int64_t plane = hw * hw;
  const int64_t per_image = 3 * plane;
  const int64_t n = static_cast<int64_t>(num_classes) * per_class;
  std::vector<double> images(static_cast<size_t>(n * per_image));
  std::vector<int> labels(static_cast<size_t>(n));

  Rng root(seed);
  for (int c = 0; c < num_classes; ++c) {
    // Each class is an oriented stripe texture: the orientation, period
    // (3..6 px, the band a sigma=1 blur damps) and inter-channel phase
    // offsets identify the class, while the spatial phase is randomized per
    // sample. Discrimination therefore needs tuned filters rather than pixel
    // templates, and classes across experiences compete for the same filter
    // bank. A faint smooth field keeps images from being pure gratings.
    Rng trng = root.child("templates").child(static_cast<uint64_t>(c));
    const double theta = trng.uniform(0.0, 3.14159265358979);
    const double period = trng.uniform(3.0, 6.0);
    const double cs = std::cos(theta), sn = std::sin(theta);
    double ch_amp[3], ch_off[3];
    for (int ch = 0; ch < 3; ++ch) {
      ch_amp[ch] = trng.uniform(style.stripe_lo, style.stripe_hi);
      ch_off[ch] = ch == 0 ? 0.0 : trng.uniform(0.0, 2.0);
    }
    std::vector<double> low(static_cast<size_t>(per_image));
    for (int ch = 0; ch < 3; ++ch) {
      std::vector<double> grid(kGrid * kGrid);
      for (double& v : grid) v = trng.normal();
      for (int64_t y = 0; y < hw; ++y)
        for (int64_t x = 0; x < hw; ++x)
          low[static_cast<size_t>(ch * plane + y * hw + x)] =
              style.lowfreq * grid_sample(grid, kGrid, hw, y, x);
    }

    Rng srng = root.child(subset).child(static_cast<uint64_t>(c));
    for (int s = 0; s < per_class; ++s) {
      const int64_t row = static_cast<int64_t>(c) * per_class + s;
      labels[static_cast<size_t>(row)] = c;
      const double brightness = srng.uniform(-style.brightness, style.brightness);
      const double sample_phase = srng.uniform(0.0, 6.28318530717959);
      const double sample_gain = srng.uniform(style.sample_gain_lo, style.sample_gain_hi);
      double* dst = &images[static_cast<size_t>(row * per_image)];
      for (int ch = 0; ch < 3; ++ch)
        for (int64_t y = 0; y < hw; ++y)
          for (int64_t x = 0; x < hw; ++x) {
            const double stripe =
                sample_gain * ch_amp[ch] *
                std::sin(6.28318530717959 * (cs * x + sn * y) / period + sample_phase +
                         ch_off[ch]);
            const double noise = srng.uniform(-style.noise, style.noise);
            const size_t p = static_cast<size_t>(ch * plane + y * hw + x);
            dst[p] = quantize_value(
                std::clamp(0.5 + low[p] + stripe + brightness + noise, 0.0, 1.0));
          }
    }
  }

  Dataset ds;
  ds.images = Tensor({n, 3, hw, hw}, std::move(images));
  ds.labels = std::move(labels);
  ds.num_classes = num_classes;
  ds.validate("make_synthetic_dataset");
  return ds;
}

Tensor solarize(const Tensor& images, double threshold) {
  std::vector<double> v(images.values().begin(), images.values().end());
  for (double& x : v)
    if (x >= threshold) x = quantize_value(1.0 - x);
  return Tensor(images.shape(), std::move(v));
}

std::vector<double> gaussian_kernel(double sigma, int kernel_size) {
  if (sigma <= 0.0) throw ContractError(kModule, "gaussian_blur", "sigma must be > 0");
  if (kernel_size < 1 || kernel_size % 2 == 0)
    throw ContractError(kModule, "gaussian_blur", "kernel_size must be odd and >= 1");
  std::vector<double> k(static_cast<size_t>(kernel_size));
  const int half = kernel_size / 2;
  double total = 0.0;
  for (int i = 0; i < kernel_size; ++i) {
    const double d = i - half;
    k[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += k[static_cast<size_t>(i)];
  }
  for (double& v : k) v /= total;
  return k;
}

Tensor gaussian_blur(const Tensor& images, double sigma, int kernel_size) {
  const auto k = gaussian_kernel(sigma, kernel_size);
  const int half = kernel_size / 2;
  const int64_t N = images.dim(0), C = images.dim(1), H = images.dim(2), W = images.dim(3);
  auto reflect = [](int64_t i, int64_t n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
    return std::clamp<int64_t>(i, 0, n - 1);
  };
  std::vector<double> tmp(static_cast<size_t>(H * W));
  std::vector<double> out(images.values().begin(), images.values().end());
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c) {
      double* img = &out[static_cast<size_t>((n * C + c) * H * W)];
      // horizontal pass
      for (int64_t y = 0; y < H; ++y)
        for (int64_t x = 0; x < W; ++x) {
          double s = 0.0;
          for (int t = -half; t <= half; ++t)
            s += k[static_cast<size_t>(t + half)] * img[y * W + reflect(x + t, W)];
          tmp[static_cast<size_t>(y * W + x)] = s;
        }
      // vertical pass
      for (int64_t y = 0; y < H; ++y)
        for (int64_t x = 0; x < W; ++x) {
          double s = 0.0;
          for (int t = -half; t <= half; ++t)
            s += k[static_cast<size_t>(t + half)] * tmp[static_cast<size_t>(reflect(y + t, H) * W + x)];
          img[y * W + x] = quantize_value(s);
        }
    }
  return Tensor(images.shape(), std::move(out));
}

Tensor adjust_contrast(const Tensor& images, double factor) {
  const int64_t N = images.dim(0), C = images.dim(1), H = images.dim(2), W = images.dim(3);
  const int64_t plane = H * W;
  std::vector<double> out(images.values().begin(), images.values().end());
  for (int64_t n = 0; n < N; ++n) {
    double mean = 0.0;
    const double* r = &out[static_cast<size_t>((n * C + 0) * plane)];
    const double* g = &out[static_cast<size_t>((n * C + 1) * plane)];
    const double* b = &out[static_cast<size_t>((n * C + 2) * plane)];
    for (int64_t p = 0; p < plane; ++p) mean += 0.299 * r[p] + 0.587 * g[p] + 0.114 * b[p];
    mean /= static_cast<double>(plane);
    double* base = &out[static_cast<size_t>(n * C * plane)];
    for (int64_t p = 0; p < C * plane; ++p)
      base[p] = quantize_value(std::clamp(mean + factor * (base[p] - mean), 0.0, 1.0));
  }
  return Tensor(images.shape(), std::move(out));
}

Tensor grayscale(const Tensor& images) {
  const int64_t N = images.dim(0), C = images.dim(1), H = images.dim(2), W = images.dim(3);
  const int64_t plane = H * W;
  std::vector<double> out(images.values().begin(), images.values().end());
  for (int64_t n = 0; n < N; ++n) {
    double* r = &out[static_cast<size_t>((n * C + 0) * plane)];
    double* g = &out[static_cast<size_t>((n * C + 1) * plane)];
    double* b = &out[static_cast<size_t>((n * C + 2) * plane)];
    for (int64_t p = 0; p < plane; ++p) {
      const double luma = quantize_value(0.299 * r[p] + 0.587 * g[p] + 0.114 * b[p]);
      r[p] = luma;
      g[p] = luma;
      b[p] = luma;
    }
  }
  return Tensor(images.shape(), std::move(out));
}

}  // namespace phn
