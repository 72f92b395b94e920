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

#ifndef PHN_DATASET_HPP
#define PHN_DATASET_HPP

#include <string>
#include <string_view>
#include <vector>

#include "tensor.hpp"

namespace phn {

/// Labelled image set. Images are [N,3,H,W] with values in [0,1].
struct Dataset {
  Tensor images;
  std::vector<int> labels;
  int num_classes = 0;
  std::vector<std::string> class_names;

  int64_t size() const { return images.defined() ? images.dim(0) : 0; }
  void validate(const char* op) const;
};

/// Batch gather: rows of `indices` stacked into [B,3,H,W] plus their labels.
std::pair<Tensor, std::vector<int>> gather(const Dataset& ds, const std::vector<int64_t>& indices);

/// CIFAR-100 binary format: records of 3074 bytes (coarse label, fine label,
/// 3072 row-major R,G,B plane bytes of a 32x32 image). Fine labels are used;
/// pixels are scaled to [0,1].
Dataset load_cifar100_binary(const std::string& path);

/// Texture contrast/noise levels of the synthetic generator. Defaults give
/// comfortably separable classes; lower stripe amplitude and higher noise
/// move the task toward the margin edge (used by the noise-robustness
/// protocol, where corruption has to bite).
struct SyntheticStyle {
  double stripe_lo = 0.25, stripe_hi = 0.35;
  double noise = 0.06;
  double brightness = 0.08;
  double lowfreq = 0.06;
  // Per-sample stripe attenuation range; widening it makes weak samples of
  // one class overlap strongly attenuated (e.g. blurred) samples of others.
  double sample_gain_lo = 1.0, sample_gain_hi = 1.0;
};

/// Per-class oriented stripe textures (random orientation, 3-6 px period,
/// class-specific channel phases) over a faint smooth field, with per-sample
/// spatial phase, brightness jitter and pixel noise. Classes are separable
/// by a small CNN. The template set depends only on (seed); samples also
/// depend on `subset`, so "train"/"test" splits share class structure.
Dataset make_synthetic_dataset(int num_classes, int per_class, int64_t hw, uint64_t seed,
                               std::string_view subset, const SyntheticStyle& style = {});

// Deterministic corruption transforms over [N,3,H,W] batches in [0,1].
Tensor solarize(const Tensor& images, double threshold = 0.5);
Tensor gaussian_blur(const Tensor& images, double sigma = 1.0, int kernel_size = 5);
Tensor adjust_contrast(const Tensor& images, double factor = 0.4);
Tensor grayscale(const Tensor& images);

/// Normalized 1-D Gaussian taps used separably by gaussian_blur.
std::vector<double> gaussian_kernel(double sigma, int kernel_size);

}  // namespace phn

#endif  // PHN_DATASET_HPP
