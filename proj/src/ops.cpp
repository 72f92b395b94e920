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

#include "ops.hpp"

#include <algorithm>
#include <cmath>

namespace phn {

namespace {

constexpr const char* kModule = "numerics";

bool should_record(std::initializer_list<const Tensor*> inputs) {
  if (!active_tape()) return false;
  for (const Tensor* t : inputs)
    if (t->requires_grad()) return true;
  return false;
}

Tensor make_output(Shape shape, std::vector<double> vals, bool track) {
  Tensor out(std::move(shape), std::move(vals), track && active_tape() != nullptr);
  quantize(out.values());
  return out;
}

void require(bool cond, const char* op, const std::string& msg) {
  if (!cond) throw ContractError(kModule, op, msg);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require(same_shape(a.shape(), b.shape()), "add",
          "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<double> v(a.values().begin(), a.values().end());
  auto bv = b.values();
  for (size_t i = 0; i < v.size(); ++i) v[i] += bv[i];
  Tensor out = make_output(a.shape(), std::move(v), a.requires_grad() || b.requires_grad());
  if (should_record({&a, &b})) {
    active_tape()->record(out, {&a, &b}, [](std::span<const double> dout, GradSink& sink) {
      if (auto* ga = sink.of(0))
        for (size_t i = 0; i < dout.size(); ++i) (*ga)[i] += dout[i];
      if (auto* gb = sink.of(1))
        for (size_t i = 0; i < dout.size(); ++i) (*gb)[i] += dout[i];
    });
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require(same_shape(a.shape(), b.shape()), "sub",
          "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<double> v(a.values().begin(), a.values().end());
  auto bv = b.values();
  for (size_t i = 0; i < v.size(); ++i) v[i] -= bv[i];
  Tensor out = make_output(a.shape(), std::move(v), a.requires_grad() || b.requires_grad());
  if (should_record({&a, &b})) {
    active_tape()->record(out, {&a, &b}, [](std::span<const double> dout, GradSink& sink) {
      if (auto* ga = sink.of(0))
        for (size_t i = 0; i < dout.size(); ++i) (*ga)[i] += dout[i];
      if (auto* gb = sink.of(1))
        for (size_t i = 0; i < dout.size(); ++i) (*gb)[i] -= dout[i];
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require(same_shape(a.shape(), b.shape()), "mul",
          "shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  std::vector<double> v(a.values().begin(), a.values().end());
  auto bv = b.values();
  for (size_t i = 0; i < v.size(); ++i) v[i] *= bv[i];
  Tensor out = make_output(a.shape(), std::move(v), a.requires_grad() || b.requires_grad());
  if (should_record({&a, &b})) {
    Tensor ac = a, bc = b;
    active_tape()->record(out, {&a, &b}, [ac, bc](std::span<const double> dout, GradSink& sink) {
      auto av = ac.values(), bv2 = bc.values();
      if (auto* ga = sink.of(0))
        for (size_t i = 0; i < dout.size(); ++i) (*ga)[i] += dout[i] * bv2[i];
      if (auto* gb = sink.of(1))
        for (size_t i = 0; i < dout.size(); ++i) (*gb)[i] += dout[i] * av[i];
    });
  }
  return out;
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> v(a.values().begin(), a.values().end());
  for (double& x : v) x *= c;
  Tensor out = make_output(a.shape(), std::move(v), a.requires_grad());
  if (should_record({&a})) {
    active_tape()->record(out, {&a}, [c](std::span<const double> dout, GradSink& sink) {
      if (auto* ga = sink.of(0))
        for (size_t i = 0; i < dout.size(); ++i) (*ga)[i] += c * dout[i];
    });
  }
  return out;
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double x : a.values()) s += x;
  Tensor out = make_output({1}, {s}, a.requires_grad());
  if (should_record({&a})) {
    const size_t n = static_cast<size_t>(a.size());
    active_tape()->record(out, {&a}, [n](std::span<const double> dout, GradSink& sink) {
      if (auto* ga = sink.of(0))
        for (size_t i = 0; i < n; ++i) (*ga)[i] += dout[0];
    });
  }
  return out;
}

Tensor relu(const Tensor& a) {
  std::vector<double> v(a.values().begin(), a.values().end());
  for (double& x : v) x = x > 0.0 ? x : 0.0;
  Tensor out = make_output(a.shape(), std::move(v), a.requires_grad());
  if (should_record({&a})) {
    Tensor ac = a;
    active_tape()->record(out, {&a}, [ac](std::span<const double> dout, GradSink& sink) {
      auto av = ac.values();
      if (auto* ga = sink.of(0))
        for (size_t i = 0; i < dout.size(); ++i)
          if (av[i] > 0.0) (*ga)[i] += dout[i];
    });
  }
  return out;
}

Tensor tanh_op(const Tensor& a) {
  std::vector<double> v(a.values().begin(), a.values().end());
  for (double& x : v) x = std::tanh(x);
  Tensor out = make_output(a.shape(), std::move(v), a.requires_grad());
  if (should_record({&a})) {
    Tensor oc = out;
    active_tape()->record(out, {&a}, [oc](std::span<const double> dout, GradSink& sink) {
      auto ov = oc.values();
      if (auto* ga = sink.of(0))
        for (size_t i = 0; i < dout.size(); ++i) (*ga)[i] += dout[i] * (1.0 - ov[i] * ov[i]);
    });
  }
  return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  require(x.rank() == 2, "linear", "input must be rank 2, got " + shape_str(x.shape()));
  require(w.rank() == 2, "linear", "weight must be rank 2, got " + shape_str(w.shape()));
  const int64_t n = x.dim(0), in = x.dim(1), outf = w.dim(0);
  require(w.dim(1) == in, "linear",
          "weight in_features " + std::to_string(w.dim(1)) + " != input features " +
              std::to_string(in));
  if (b.defined())
    require(b.rank() == 1 && b.dim(0) == outf, "linear",
            "bias shape " + shape_str(b.shape()) + " incompatible with out_features " +
                std::to_string(outf));

  std::vector<double> v(static_cast<size_t>(n * outf), 0.0);
  auto xv = x.values();
  auto wv = w.values();
  for (int64_t i = 0; i < n; ++i)
    for (int64_t o = 0; o < outf; ++o) {
      double s = b.defined() ? b.values()[static_cast<size_t>(o)] : 0.0;
      const double* xr = &xv[static_cast<size_t>(i * in)];
      const double* wr = &wv[static_cast<size_t>(o * in)];
      for (int64_t k = 0; k < in; ++k) s += xr[k] * wr[k];
      v[static_cast<size_t>(i * outf + o)] = s;
    }

  const bool track = x.requires_grad() || w.requires_grad() || (b.defined() && b.requires_grad());
  Tensor out = make_output({n, outf}, std::move(v), track);
  const bool has_bias = b.defined();
  if (active_tape() && track) {
    Tensor xc = x, wc = w, bc = b;
    auto fn = [xc, wc, n, in, outf, has_bias](std::span<const double> dout, GradSink& sink) {
      auto xv2 = xc.values();
      auto wv2 = wc.values();
      if (auto* gx = sink.of(0)) {
        for (int64_t i = 0; i < n; ++i)
          for (int64_t o = 0; o < outf; ++o) {
            const double d = dout[static_cast<size_t>(i * outf + o)];
            const double* wr = &wv2[static_cast<size_t>(o * in)];
            double* gr = &(*gx)[static_cast<size_t>(i * in)];
            for (int64_t k = 0; k < in; ++k) gr[k] += d * wr[k];
          }
      }
      if (auto* gw = sink.of(1)) {
        for (int64_t i = 0; i < n; ++i)
          for (int64_t o = 0; o < outf; ++o) {
            const double d = dout[static_cast<size_t>(i * outf + o)];
            const double* xr = &xv2[static_cast<size_t>(i * in)];
            double* gr = &(*gw)[static_cast<size_t>(o * in)];
            for (int64_t k = 0; k < in; ++k) gr[k] += d * xr[k];
          }
      }
      if (has_bias) {
        if (auto* gb = sink.of(2)) {
          for (int64_t i = 0; i < n; ++i)
            for (int64_t o = 0; o < outf; ++o)
              (*gb)[static_cast<size_t>(o)] += dout[static_cast<size_t>(i * outf + o)];
        }
      }
    };
    if (has_bias)
      active_tape()->record(out, {&x, &w, &b}, std::move(fn));
    else
      active_tape()->record(out, {&x, &w}, std::move(fn));
  }
  return out;
}

namespace {

// Gathers padded patches: cols[(ci*k+u)*k+v][oh*ow] for one batch item.
void im2col(const double* x, int64_t C, int64_t H, int64_t W, int k, int stride, int pad,
            int64_t oH, int64_t oW, double* cols) {
  const int64_t patch = C * k * k;
  for (int64_t c = 0; c < C; ++c)
    for (int u = 0; u < k; ++u)
      for (int v = 0; v < k; ++v) {
        const int64_t row = (c * k + u) * k + v;
        double* dst = cols + row * oH * oW;
        for (int64_t oh = 0; oh < oH; ++oh) {
          const int64_t ih = oh * stride - pad + u;
          for (int64_t ow = 0; ow < oW; ++ow) {
            const int64_t iw = ow * stride - pad + v;
            *dst++ = (ih >= 0 && ih < H && iw >= 0 && iw < W)
                         ? x[(c * H + ih) * W + iw]
                         : 0.0;
          }
        }
      }
  (void)patch;
}

void col2im_accumulate(const double* cols, int64_t C, int64_t H, int64_t W, int k, int stride,
                       int pad, int64_t oH, int64_t oW, double* gx) {
  for (int64_t c = 0; c < C; ++c)
    for (int u = 0; u < k; ++u)
      for (int v = 0; v < k; ++v) {
        const int64_t row = (c * k + u) * k + v;
        const double* src = cols + row * oH * oW;
        for (int64_t oh = 0; oh < oH; ++oh) {
          const int64_t ih = oh * stride - pad + u;
          if (ih < 0 || ih >= H) { src += oW; continue; }
          for (int64_t ow = 0; ow < oW; ++ow) {
            const int64_t iw = ow * stride - pad + v;
            if (iw >= 0 && iw < W) gx[(c * H + ih) * W + iw] += src[ow];
          }
          src += oW;
        }
      }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, int stride, int padding) {
  require(x.rank() == 4, "conv2d", "input must be rank 4, got " + shape_str(x.shape()));
  require(w.rank() == 4, "conv2d", "kernel must be rank 4, got " + shape_str(w.shape()));
  const int64_t N = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
  const int64_t Cout = w.dim(0), k = w.dim(2);
  require(w.dim(1) == Cin, "conv2d",
          "kernel in-channels " + std::to_string(w.dim(1)) + " != input channels " +
              std::to_string(Cin));
  require(w.dim(2) == w.dim(3), "conv2d", "kernel must be square, got " + shape_str(w.shape()));
  require(k % 2 == 1, "conv2d", "kernel size must be odd, got " + std::to_string(k));
  require(stride >= 1, "conv2d", "stride must be >= 1, got " + std::to_string(stride));
  require(padding >= 0, "conv2d", "padding must be >= 0, got " + std::to_string(padding));
  const int64_t oH = (H + 2 * padding - k) / stride + 1;
  const int64_t oW = (W + 2 * padding - k) / stride + 1;
  require(oH >= 1 && oW >= 1, "conv2d",
          "output would be empty for input " + shape_str(x.shape()) + " kernel " +
              shape_str(w.shape()));

  const int64_t patch = Cin * k * k;
  const int64_t plane = oH * oW;
  std::vector<double> cols(static_cast<size_t>(patch * plane));
  std::vector<double> v(static_cast<size_t>(N * Cout * plane), 0.0);
  auto xv = x.values();
  auto wv = w.values();
  for (int64_t n = 0; n < N; ++n) {
    im2col(&xv[static_cast<size_t>(n * Cin * H * W)], Cin, H, W, static_cast<int>(k), stride,
           padding, oH, oW, cols.data());
    // out[co][p] = sum_r w[co][r] * cols[r][p]
    for (int64_t co = 0; co < Cout; ++co) {
      double* orow = &v[static_cast<size_t>((n * Cout + co) * plane)];
      const double* wrow = &wv[static_cast<size_t>(co * patch)];
      for (int64_t r = 0; r < patch; ++r) {
        const double wr = wrow[r];
        if (wr == 0.0) continue;
        const double* crow = &cols[static_cast<size_t>(r * plane)];
        for (int64_t p = 0; p < plane; ++p) orow[p] += wr * crow[p];
      }
    }
  }

  const bool track = x.requires_grad() || w.requires_grad();
  Tensor out = make_output({N, Cout, oH, oW}, std::move(v), track);
  if (active_tape() && track) {
    Tensor xc = x, wc = w;
    active_tape()->record(
        out, {&x, &w},
        [xc, wc, N, Cin, H, W, Cout, k, stride, padding, oH, oW, patch,
         plane](std::span<const double> dout, GradSink& sink) {
          auto xv2 = xc.values();
          auto wv2 = wc.values();
          auto* gx = sink.of(0);
          auto* gw = sink.of(1);
          std::vector<double> cols(static_cast<size_t>(patch * plane));
          std::vector<double> dcols;
          if (gx) dcols.resize(static_cast<size_t>(patch * plane));
          for (int64_t n = 0; n < N; ++n) {
            if (gw || gx)
              im2col(&xv2[static_cast<size_t>(n * Cin * H * W)], Cin, H, W, static_cast<int>(k),
                     stride, padding, oH, oW, cols.data());
            const double* drow0 = &dout[static_cast<size_t>(n * Cout * plane)];
            if (gw) {
              // dW[co][r] += sum_p dout[co][p] * cols[r][p]
              for (int64_t co = 0; co < Cout; ++co) {
                const double* drow = drow0 + co * plane;
                double* gwrow = &(*gw)[static_cast<size_t>(co * patch)];
                for (int64_t r = 0; r < patch; ++r) {
                  const double* crow = &cols[static_cast<size_t>(r * plane)];
                  double s = 0.0;
                  for (int64_t p = 0; p < plane; ++p) s += drow[p] * crow[p];
                  gwrow[r] += s;
                }
              }
            }
            if (gx) {
              std::fill(dcols.begin(), dcols.end(), 0.0);
              // dcols[r][p] += sum_co w[co][r] * dout[co][p]
              for (int64_t co = 0; co < Cout; ++co) {
                const double* drow = drow0 + co * plane;
                const double* wrow = &wv2[static_cast<size_t>(co * patch)];
                for (int64_t r = 0; r < patch; ++r) {
                  const double wr = wrow[r];
                  if (wr == 0.0) continue;
                  double* dcrow = &dcols[static_cast<size_t>(r * plane)];
                  for (int64_t p = 0; p < plane; ++p) dcrow[p] += wr * drow[p];
                }
              }
              col2im_accumulate(dcols.data(), Cin, H, W, static_cast<int>(k), stride, padding, oH,
                                oW, &(*gx)[static_cast<size_t>(n * Cin * H * W)]);
            }
          }
        });
  }
  return out;
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, RunningStats& stats,
                  BnMode mode, double momentum, double eps) {
  require(x.rank() == 4, "batch_norm", "input must be rank 4, got " + shape_str(x.shape()));
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  require(gamma.rank() == 1 && gamma.dim(0) == C, "batch_norm",
          "gamma shape " + shape_str(gamma.shape()) + " != channels " + std::to_string(C));
  require(beta.rank() == 1 && beta.dim(0) == C, "batch_norm",
          "beta shape " + shape_str(beta.shape()) + " != channels " + std::to_string(C));
  if (!stats.initialized) stats.reset(C);
  const int64_t m = N * H * W;
  if (mode == BnMode::Train)
    require(m >= 2, "batch_norm",
            "degenerate statistics: need N*H*W >= 2 in train mode, got " + std::to_string(m));

  auto xv = x.values();
  const int64_t plane = H * W;
  std::vector<double> mean(static_cast<size_t>(C)), invstd(static_cast<size_t>(C));
  if (mode == BnMode::Train) {
    for (int64_t c = 0; c < C; ++c) {
      double s = 0.0;
      for (int64_t n = 0; n < N; ++n) {
        const double* p = &xv[static_cast<size_t>((n * C + c) * plane)];
        for (int64_t i = 0; i < plane; ++i) s += p[i];
      }
      const double mu = s / static_cast<double>(m);
      double vs = 0.0;
      for (int64_t n = 0; n < N; ++n) {
        const double* p = &xv[static_cast<size_t>((n * C + c) * plane)];
        for (int64_t i = 0; i < plane; ++i) {
          const double d = p[i] - mu;
          vs += d * d;
        }
      }
      const double var = vs / static_cast<double>(m);
      mean[static_cast<size_t>(c)] = mu;
      invstd[static_cast<size_t>(c)] = 1.0 / std::sqrt(var + eps);
      // Running update: biased batch variance is debiased for the estimate.
      const double unbiased = m > 1 ? var * static_cast<double>(m) / static_cast<double>(m - 1) : var;
      stats.mean[static_cast<size_t>(c)] =
          quantize_value((1.0 - momentum) * stats.mean[static_cast<size_t>(c)] + momentum * mu);
      stats.var[static_cast<size_t>(c)] =
          quantize_value((1.0 - momentum) * stats.var[static_cast<size_t>(c)] + momentum * unbiased);
    }
  } else {
    for (int64_t c = 0; c < C; ++c) {
      mean[static_cast<size_t>(c)] = stats.mean[static_cast<size_t>(c)];
      invstd[static_cast<size_t>(c)] = 1.0 / std::sqrt(stats.var[static_cast<size_t>(c)] + eps);
    }
  }

  std::vector<double> xhat(static_cast<size_t>(x.size()));
  std::vector<double> v(static_cast<size_t>(x.size()));
  auto gv = gamma.values();
  auto bv = beta.values();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c) {
      const double mu = mean[static_cast<size_t>(c)];
      const double is = invstd[static_cast<size_t>(c)];
      const double g = gv[static_cast<size_t>(c)];
      const double b = bv[static_cast<size_t>(c)];
      const size_t base = static_cast<size_t>((n * C + c) * plane);
      for (int64_t i = 0; i < plane; ++i) {
        const double xh = (xv[base + static_cast<size_t>(i)] - mu) * is;
        xhat[base + static_cast<size_t>(i)] = xh;
        v[base + static_cast<size_t>(i)] = g * xh + b;
      }
    }

  const bool track = x.requires_grad() || gamma.requires_grad() || beta.requires_grad();
  Tensor out = make_output(x.shape(), std::move(v), track);
  if (active_tape() && track) {
    Tensor gc = gamma;
    auto xhat_p = std::make_shared<std::vector<double>>(std::move(xhat));
    auto invstd_p = std::make_shared<std::vector<double>>(std::move(invstd));
    const bool train = mode == BnMode::Train;
    active_tape()->record(
        out, {&x, &gamma, &beta},
        [gc, xhat_p, invstd_p, N, C, plane, m, train](std::span<const double> dout,
                                                      GradSink& sink) {
          const auto& xh = *xhat_p;
          const auto& is = *invstd_p;
          auto gv2 = gc.values();
          auto* gx = sink.of(0);
          auto* gg = sink.of(1);
          auto* gb = sink.of(2);
          for (int64_t c = 0; c < C; ++c) {
            double sum_dy = 0.0, sum_dy_xh = 0.0;
            for (int64_t n = 0; n < N; ++n) {
              const size_t base = static_cast<size_t>((n * C + c) * plane);
              for (int64_t i = 0; i < plane; ++i) {
                const double d = dout[base + static_cast<size_t>(i)];
                sum_dy += d;
                sum_dy_xh += d * xh[base + static_cast<size_t>(i)];
              }
            }
            if (gg) (*gg)[static_cast<size_t>(c)] += sum_dy_xh;
            if (gb) (*gb)[static_cast<size_t>(c)] += sum_dy;
            if (gx) {
              const double g_is = gv2[static_cast<size_t>(c)] * is[static_cast<size_t>(c)];
              if (train) {
                const double md = sum_dy / static_cast<double>(m);
                const double mdx = sum_dy_xh / static_cast<double>(m);
                for (int64_t n = 0; n < N; ++n) {
                  const size_t base = static_cast<size_t>((n * C + c) * plane);
                  for (int64_t i = 0; i < plane; ++i) {
                    const size_t j = base + static_cast<size_t>(i);
                    (*gx)[j] += g_is * (dout[j] - md - xh[j] * mdx);
                  }
                }
              } else {
                for (int64_t n = 0; n < N; ++n) {
                  const size_t base = static_cast<size_t>((n * C + c) * plane);
                  for (int64_t i = 0; i < plane; ++i) {
                    const size_t j = base + static_cast<size_t>(i);
                    (*gx)[j] += g_is * dout[j];
                  }
                }
              }
            }
          }
        });
  }
  return out;
}

Tensor avg_pool2d(const Tensor& x, int k, int s) {
  require(x.rank() == 4, "avg_pool2d", "input must be rank 4, got " + shape_str(x.shape()));
  require(k >= 1, "avg_pool2d", "kernel must be >= 1");
  if (s <= 0) s = k;
  const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  require(H >= k && W >= k, "avg_pool2d",
          "kernel " + std::to_string(k) + " larger than input " + shape_str(x.shape()));
  const int64_t oH = (H - k) / s + 1;
  const int64_t oW = (W - k) / s + 1;
  const double inv = 1.0 / (static_cast<double>(k) * k);

  std::vector<double> v(static_cast<size_t>(N * C * oH * oW));
  auto xv = x.values();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c) {
      const double* p = &xv[static_cast<size_t>((n * C + c) * H * W)];
      double* o = &v[static_cast<size_t>((n * C + c) * oH * oW)];
      for (int64_t oh = 0; oh < oH; ++oh)
        for (int64_t ow = 0; ow < oW; ++ow) {
          double sum2 = 0.0;
          for (int u = 0; u < k; ++u)
            for (int vv = 0; vv < k; ++vv) sum2 += p[(oh * s + u) * W + (ow * s + vv)];
          o[oh * oW + ow] = sum2 * inv;
        }
    }

  Tensor out = make_output({N, C, oH, oW}, std::move(v), x.requires_grad());
  if (should_record({&x})) {
    active_tape()->record(out, {&x},
                          [N, C, H, W, oH, oW, k, s, inv](std::span<const double> dout,
                                                          GradSink& sink) {
                            auto* gx = sink.of(0);
                            if (!gx) return;
                            for (int64_t n = 0; n < N; ++n)
                              for (int64_t c = 0; c < C; ++c) {
                                double* g = &(*gx)[static_cast<size_t>((n * C + c) * H * W)];
                                const double* d =
                                    &dout[static_cast<size_t>((n * C + c) * oH * oW)];
                                for (int64_t oh = 0; oh < oH; ++oh)
                                  for (int64_t ow = 0; ow < oW; ++ow) {
                                    const double dv = d[oh * oW + ow] * inv;
                                    for (int u = 0; u < k; ++u)
                                      for (int vv = 0; vv < k; ++vv)
                                        g[(oh * s + u) * W + (ow * s + vv)] += dv;
                                  }
                              }
                          });
  }
  return out;
}

Tensor flatten2(const Tensor& x) {
  require(x.rank() >= 2, "flatten", "input must have rank >= 2");
  return reshape(x, {x.dim(0), x.size() / x.dim(0)});
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
  require(logits.rank() == 2, "cross_entropy",
          "logits must be rank 2, got " + shape_str(logits.shape()));
  const int64_t N = logits.dim(0), C = logits.dim(1);
  require(static_cast<int64_t>(labels.size()) == N, "cross_entropy",
          "label count " + std::to_string(labels.size()) + " != batch " + std::to_string(N));
  for (int64_t i = 0; i < N; ++i)
    require(labels[static_cast<size_t>(i)] >= 0 && labels[static_cast<size_t>(i)] < C,
            "cross_entropy",
            "label " + std::to_string(labels[static_cast<size_t>(i)]) + " out of range [0," +
                std::to_string(C) + ") at row " + std::to_string(i));

  auto lv = logits.values();
  std::vector<double> probs(static_cast<size_t>(N * C));
  double loss = 0.0;
  for (int64_t i = 0; i < N; ++i) {
    const double* row = &lv[static_cast<size_t>(i * C)];
    double mx = row[0];
    for (int64_t c = 1; c < C; ++c) mx = std::max(mx, row[c]);
    double z = 0.0;
    for (int64_t c = 0; c < C; ++c) z += std::exp(row[c] - mx);
    const double lse = mx + std::log(z);
    for (int64_t c = 0; c < C; ++c)
      probs[static_cast<size_t>(i * C + c)] = std::exp(row[c] - lse);
    loss += lse - row[labels[static_cast<size_t>(i)]];
  }
  loss /= static_cast<double>(N);

  Tensor out = make_output({1}, {loss}, logits.requires_grad());
  if (should_record({&logits})) {
    auto probs_p = std::make_shared<std::vector<double>>(std::move(probs));
    auto labels_p = std::make_shared<std::vector<int>>(labels);
    active_tape()->record(out, {&logits},
                          [probs_p, labels_p, N, C](std::span<const double> dout, GradSink& sink) {
                            auto* gl = sink.of(0);
                            if (!gl) return;
                            const double d = dout[0] / static_cast<double>(N);
                            for (int64_t i = 0; i < N; ++i)
                              for (int64_t c = 0; c < C; ++c) {
                                const size_t j = static_cast<size_t>(i * C + c);
                                double g = (*probs_p)[j];
                                if (c == (*labels_p)[static_cast<size_t>(i)]) g -= 1.0;
                                (*gl)[j] += d * g;
                              }
                          });
  }
  return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
  require(numel(shape) == x.size(), "reshape",
          "cannot reshape " + shape_str(x.shape()) + " to " + shape_str(shape));
  std::vector<double> v(x.values().begin(), x.values().end());
  Tensor out = make_output(std::move(shape), std::move(v), x.requires_grad());
  if (should_record({&x})) {
    active_tape()->record(out, {&x}, [](std::span<const double> dout, GradSink& sink) {
      if (auto* gx = sink.of(0))
        for (size_t i = 0; i < dout.size(); ++i) (*gx)[i] += dout[i];
    });
  }
  return out;
}

Tensor permute(const Tensor& x, const std::vector<int>& perm) {
  require(static_cast<int>(perm.size()) == x.rank(), "permute",
          "perm rank " + std::to_string(perm.size()) + " != tensor rank " +
              std::to_string(x.rank()));
  const int r = x.rank();
  Shape oshape(static_cast<size_t>(r));
  for (int i = 0; i < r; ++i) oshape[static_cast<size_t>(i)] = x.dim(static_cast<size_t>(perm[static_cast<size_t>(i)]));

  // Strides of the source, then walk the destination in order.
  std::vector<int64_t> istr(static_cast<size_t>(r), 1);
  for (int i = r - 2; i >= 0; --i)
    istr[static_cast<size_t>(i)] = istr[static_cast<size_t>(i + 1)] * x.dim(static_cast<size_t>(i + 1));
  std::vector<int64_t> map_str(static_cast<size_t>(r));
  for (int i = 0; i < r; ++i) map_str[static_cast<size_t>(i)] = istr[static_cast<size_t>(perm[static_cast<size_t>(i)])];

  const int64_t n = x.size();
  std::vector<double> v(static_cast<size_t>(n));
  auto xv = x.values();
  std::vector<int64_t> idx(static_cast<size_t>(r), 0);
  auto index_map = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(n));
  for (int64_t o = 0; o < n; ++o) {
    int64_t src = 0;
    for (int i = 0; i < r; ++i) src += idx[static_cast<size_t>(i)] * map_str[static_cast<size_t>(i)];
    v[static_cast<size_t>(o)] = xv[static_cast<size_t>(src)];
    (*index_map)[static_cast<size_t>(o)] = src;
    for (int i = r - 1; i >= 0; --i) {
      if (++idx[static_cast<size_t>(i)] < oshape[static_cast<size_t>(i)]) break;
      idx[static_cast<size_t>(i)] = 0;
    }
  }

  Tensor out = make_output(std::move(oshape), std::move(v), x.requires_grad());
  if (should_record({&x})) {
    active_tape()->record(out, {&x}, [index_map](std::span<const double> dout, GradSink& sink) {
      if (auto* gx = sink.of(0))
        for (size_t o = 0; o < dout.size(); ++o)
          (*gx)[static_cast<size_t>((*index_map)[o])] += dout[o];
    });
  }
  return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2, "concat_cols", "inputs must be rank 2");
  require(a.dim(0) == b.dim(0), "concat_cols",
          "row mismatch " + std::to_string(a.dim(0)) + " vs " + std::to_string(b.dim(0)));
  const int64_t n = a.dim(0), p = a.dim(1), q = b.dim(1);
  std::vector<double> v(static_cast<size_t>(n * (p + q)));
  auto av = a.values();
  auto bv = b.values();
  for (int64_t i = 0; i < n; ++i) {
    std::copy(&av[static_cast<size_t>(i * p)], &av[static_cast<size_t>(i * p)] + p,
              &v[static_cast<size_t>(i * (p + q))]);
    std::copy(&bv[static_cast<size_t>(i * q)], &bv[static_cast<size_t>(i * q)] + q,
              &v[static_cast<size_t>(i * (p + q) + p)]);
  }
  Tensor out = make_output({n, p + q}, std::move(v), a.requires_grad() || b.requires_grad());
  if (should_record({&a, &b})) {
    active_tape()->record(out, {&a, &b}, [n, p, q](std::span<const double> dout, GradSink& sink) {
      if (auto* ga = sink.of(0))
        for (int64_t i = 0; i < n; ++i)
          for (int64_t j = 0; j < p; ++j)
            (*ga)[static_cast<size_t>(i * p + j)] += dout[static_cast<size_t>(i * (p + q) + j)];
      if (auto* gb = sink.of(1))
        for (int64_t i = 0; i < n; ++i)
          for (int64_t j = 0; j < q; ++j)
            (*gb)[static_cast<size_t>(i * q + j)] +=
                dout[static_cast<size_t>(i * (p + q) + p + j)];
    });
  }
  return out;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  require(a.rank() == b.rank() && a.rank() >= 1, "concat_rows", "rank mismatch");
  for (int i = 1; i < a.rank(); ++i)
    require(a.dim(static_cast<size_t>(i)) == b.dim(static_cast<size_t>(i)), "concat_rows",
            "trailing shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Shape shape = a.shape();
  shape[0] = a.dim(0) + b.dim(0);
  std::vector<double> v;
  v.reserve(static_cast<size_t>(a.size() + b.size()));
  v.insert(v.end(), a.values().begin(), a.values().end());
  v.insert(v.end(), b.values().begin(), b.values().end());
  Tensor out = make_output(std::move(shape), std::move(v), a.requires_grad() || b.requires_grad());
  if (should_record({&a, &b})) {
    const size_t na = static_cast<size_t>(a.size());
    active_tape()->record(out, {&a, &b}, [na](std::span<const double> dout, GradSink& sink) {
      if (auto* ga = sink.of(0))
        for (size_t i = 0; i < na; ++i) (*ga)[i] += dout[i];
      if (auto* gb = sink.of(1))
        for (size_t i = na; i < dout.size(); ++i) (*gb)[i - na] += dout[i];
    });
  }
  return out;
}

Tensor repeat_row(const Tensor& v, int64_t n) {
  require(v.rank() == 2 && v.dim(0) == 1, "repeat_row",
          "expected [1,c] input, got " + shape_str(v.shape()));
  const int64_t c = v.dim(1);
  std::vector<double> out_v(static_cast<size_t>(n * c));
  auto vv = v.values();
  for (int64_t i = 0; i < n; ++i)
    std::copy(vv.begin(), vv.end(), &out_v[static_cast<size_t>(i * c)]);
  Tensor out = make_output({n, c}, std::move(out_v), v.requires_grad());
  if (should_record({&v})) {
    active_tape()->record(out, {&v}, [n, c](std::span<const double> dout, GradSink& sink) {
      if (auto* gv = sink.of(0))
        for (int64_t i = 0; i < n; ++i)
          for (int64_t j = 0; j < c; ++j)
            (*gv)[static_cast<size_t>(j)] += dout[static_cast<size_t>(i * c + j)];
    });
  }
  return out;
}

Tensor select_row(const Tensor& m, int64_t r) {
  require(m.rank() == 2, "select_row", "expected rank-2 input, got " + shape_str(m.shape()));
  require(r >= 0 && r < m.dim(0), "select_row",
          "row " + std::to_string(r) + " out of range [0," + std::to_string(m.dim(0)) + ")");
  const int64_t c = m.dim(1);
  std::vector<double> v(static_cast<size_t>(c));
  auto mv = m.values();
  std::copy(&mv[static_cast<size_t>(r * c)], &mv[static_cast<size_t>(r * c)] + c, v.begin());
  Tensor out = make_output({1, c}, std::move(v), m.requires_grad());
  if (should_record({&m})) {
    active_tape()->record(out, {&m}, [r, c](std::span<const double> dout, GradSink& sink) {
      if (auto* gm = sink.of(0))
        for (int64_t j = 0; j < c; ++j)
          (*gm)[static_cast<size_t>(r * c + j)] += dout[static_cast<size_t>(j)];
    });
  }
  return out;
}

Tensor slice_flat(const Tensor& x, int64_t offset, int64_t len) {
  require(offset >= 0 && len >= 0 && offset + len <= x.size(), "slice_flat",
          "range [" + std::to_string(offset) + "," + std::to_string(offset + len) +
              ") out of bounds for " + std::to_string(x.size()) + " elements");
  std::vector<double> v(static_cast<size_t>(len));
  auto xv = x.values();
  std::copy(&xv[static_cast<size_t>(offset)], &xv[static_cast<size_t>(offset)] + len, v.begin());
  Tensor out = make_output({len}, std::move(v), x.requires_grad());
  if (should_record({&x})) {
    active_tape()->record(out, {&x}, [offset](std::span<const double> dout, GradSink& sink) {
      if (auto* gx = sink.of(0))
        for (size_t j = 0; j < dout.size(); ++j)
          (*gx)[static_cast<size_t>(offset) + j] += dout[j];
    });
  }
  return out;
}

Tensor sum_sq_diff(const Tensor& a, const Tensor& b) {
  Tensor d = sub(a, b);
  return sum(mul(d, d));
}

}  // namespace phn
