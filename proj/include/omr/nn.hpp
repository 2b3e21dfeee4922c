// include/omr/nn.hpp

// Copyright 2026  omr-toolkit authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.
//
// Convolutional building blocks with analytic backward passes. There is no
// autodiff graph: every op returns exactly the gradients its callers need.

#ifndef OMR_NN_HPP_
#define OMR_NN_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "omr/tensor.hpp"

namespace omr {

// ---------------------------------------------------------------------------
// conv2d: stride-1 dilated cross-correlation with "same" zero padding.
// Weights are [C_out, C_in, k_h, k_w], bias [C_out]. Kernel extents must be
// odd so that "same" padding is symmetric.
// ---------------------------------------------------------------------------

struct Conv2dSpec {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel_h = 3;
  std::size_t kernel_w = 3;
  std::size_t dilation_h = 1;
  std::size_t dilation_w = 1;

  std::size_t pad_h() const { return (kernel_h - 1) * dilation_h / 2; }
  std::size_t pad_w() const { return (kernel_w - 1) * dilation_w / 2; }
};

namespace detail {

// Gather the receptive fields of one batch item into a [C_in*kh*kw, H*W]
// matrix (zero where the tap falls outside the image).
inline void im2col(const Real* x, std::size_t c_in, std::size_t h,
                   std::size_t w, const Conv2dSpec& spec, Real* cols) {
  const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(spec.pad_h());
  const std::ptrdiff_t pw = static_cast<std::ptrdiff_t>(spec.pad_w());
  const std::size_t hw = h * w;
  std::size_t r = 0;
  for (std::size_t c = 0; c < c_in; ++c) {
    const Real* plane = x + c * hw;
    for (std::size_t ki = 0; ki < spec.kernel_h; ++ki) {
      const std::ptrdiff_t dy =
          static_cast<std::ptrdiff_t>(ki * spec.dilation_h) - ph;
      for (std::size_t kj = 0; kj < spec.kernel_w; ++kj, ++r) {
        const std::ptrdiff_t dx =
            static_cast<std::ptrdiff_t>(kj * spec.dilation_w) - pw;
        Real* dst = cols + r * hw;
        for (std::size_t i = 0; i < h; ++i) {
          const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i) + dy;
          Real* drow = dst + i * w;
          if (si < 0 || si >= static_cast<std::ptrdiff_t>(h)) {
            std::fill(drow, drow + w, Real{0});
            continue;
          }
          const Real* srow = plane + static_cast<std::size_t>(si) * w;
          for (std::size_t j = 0; j < w; ++j) {
            const std::ptrdiff_t sj = static_cast<std::ptrdiff_t>(j) + dx;
            drow[j] = (sj < 0 || sj >= static_cast<std::ptrdiff_t>(w))
                          ? Real{0}
                          : srow[static_cast<std::size_t>(sj)];
          }
        }
      }
    }
  }
}

// Scatter-add of a column matrix back onto the input plane; adjoint of im2col.
inline void col2im_add(const Real* cols, std::size_t c_in, std::size_t h,
                       std::size_t w, const Conv2dSpec& spec, Real* x) {
  const std::ptrdiff_t ph = static_cast<std::ptrdiff_t>(spec.pad_h());
  const std::ptrdiff_t pw = static_cast<std::ptrdiff_t>(spec.pad_w());
  const std::size_t hw = h * w;
  std::size_t r = 0;
  for (std::size_t c = 0; c < c_in; ++c) {
    Real* plane = x + c * hw;
    for (std::size_t ki = 0; ki < spec.kernel_h; ++ki) {
      const std::ptrdiff_t dy =
          static_cast<std::ptrdiff_t>(ki * spec.dilation_h) - ph;
      for (std::size_t kj = 0; kj < spec.kernel_w; ++kj, ++r) {
        const std::ptrdiff_t dx =
            static_cast<std::ptrdiff_t>(kj * spec.dilation_w) - pw;
        const Real* src = cols + r * hw;
        for (std::size_t i = 0; i < h; ++i) {
          const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i) + dy;
          if (si < 0 || si >= static_cast<std::ptrdiff_t>(h)) continue;
          Real* prow = plane + static_cast<std::size_t>(si) * w;
          const Real* srow = src + i * w;
          for (std::size_t j = 0; j < w; ++j) {
            const std::ptrdiff_t sj = static_cast<std::ptrdiff_t>(j) + dx;
            if (sj < 0 || sj >= static_cast<std::ptrdiff_t>(w)) continue;
            prow[static_cast<std::size_t>(sj)] += srow[j];
          }
        }
      }
    }
  }
}

}  // namespace detail

inline void conv2d_check(const Tensor& x, const Conv2dSpec& spec,
                         const Tensor& w, const Tensor& b) {
  if (x.rank() != 4) throw DimensionError("conv2d: input must be [N,C,H,W]");
  if (spec.kernel_h % 2 == 0 || spec.kernel_w % 2 == 0)
    throw DimensionError("conv2d: kernel extents must be odd");
  if (spec.dilation_h < 1 || spec.dilation_w < 1)
    throw DimensionError("conv2d: dilation must be >= 1");
  if (x.extent(1) != spec.in_channels)
    throw DimensionError("conv2d: input has " + std::to_string(x.extent(1)) +
                         " channels, spec expects " +
                         std::to_string(spec.in_channels));
  const Shape want_w = {spec.out_channels, spec.in_channels, spec.kernel_h,
                        spec.kernel_w};
  if (w.shape() != want_w)
    throw DimensionError("conv2d: weight shape " + shape_str(w.shape()) +
                         " does not match spec " + shape_str(want_w));
  if (b.shape() != Shape{spec.out_channels})
    throw DimensionError("conv2d: bias shape mismatch");
}

inline Tensor conv2d_forward(const Tensor& x, const Conv2dSpec& spec,
                             const Tensor& w, const Tensor& b) {
  conv2d_check(x, spec, w, b);
  const std::size_t n = x.extent(0), c_in = x.extent(1), h = x.extent(2),
                    wd = x.extent(3);
  const std::size_t hw = h * wd;
  const std::size_t rows = c_in * spec.kernel_h * spec.kernel_w;
  const bool pointwise = spec.kernel_h == 1 && spec.kernel_w == 1;
  Tensor y({n, spec.out_channels, h, wd});
  // Items write disjoint output slices, so results are bit-identical for
  // every thread count.
  parallel_rows(n, n * spec.out_channels * rows * hw,
                [&](std::size_t i0, std::size_t i1) {
    std::vector<Real> cols(pointwise ? 0 : rows * hw);
    for (std::size_t item = i0; item < i1; ++item) {
      const Real* src = x.data() + item * c_in * hw;
      if (!pointwise) {
        detail::im2col(src, c_in, h, wd, spec, cols.data());
        src = cols.data();  // 1x1 kernels use the input planes directly
      }
      Real* out = y.data() + item * spec.out_channels * hw;
      detail::matmul_rows(w.data(), src, out, spec.out_channels, rows, hw, 0,
                          spec.out_channels);
      for (std::size_t c = 0; c < spec.out_channels; ++c) {
        const Real bias = b[c];
        Real* plane = out + c * hw;
        for (std::size_t p = 0; p < hw; ++p) plane[p] += bias;
      }
    }
  });
  return y;
}

struct Conv2dGrads {
  Tensor d_x;
  Tensor d_w;
  Tensor d_b;
};

inline Conv2dGrads conv2d_backward(const Tensor& x, const Conv2dSpec& spec,
                                   const Tensor& w, const Tensor& d_out) {
  const std::size_t n = x.extent(0), c_in = x.extent(1), h = x.extent(2),
                    wd = x.extent(3);
  const std::size_t hw = h * wd;
  const std::size_t rows = c_in * spec.kernel_h * spec.kernel_w;
  const bool pointwise = spec.kernel_h == 1 && spec.kernel_w == 1;
  Conv2dGrads g{Tensor(x.shape()), Tensor(w.shape()),
                Tensor({spec.out_channels})};
  // d_x slices are disjoint per item; weight/bias gradients accumulate into
  // per-chunk buffers merged in chunk order below, so a given thread count
  // always reproduces the same bits.
  const int threads = max_threads();
  const std::size_t chunks =
      std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
  std::vector<std::vector<Real>> dw_chunks(chunks,
                                           std::vector<Real>(w.numel(), 0.0));
  std::vector<std::vector<Real>> db_chunks(
      chunks, std::vector<Real>(spec.out_channels, 0.0));
  const std::size_t per_chunk = (n + chunks - 1) / chunks;
  parallel_rows(chunks, n * spec.out_channels * rows * hw,
                [&](std::size_t c0, std::size_t c1) {
    std::vector<Real> cols(pointwise ? 0 : rows * hw);
    std::vector<Real> dcols(rows * hw);
    std::vector<Real> dw_item(w.numel());
    for (std::size_t chunk = c0; chunk < c1; ++chunk) {
      std::vector<Real>& dw_acc = dw_chunks[chunk];
      std::vector<Real>& db_acc = db_chunks[chunk];
      const std::size_t item_end = std::min(n, (chunk + 1) * per_chunk);
      for (std::size_t item = chunk * per_chunk; item < item_end; ++item) {
        const Real* dy = d_out.data() + item * spec.out_channels * hw;
        for (std::size_t c = 0; c < spec.out_channels; ++c) {
          const Real* plane = dy + c * hw;
          Real acc = 0;
          for (std::size_t p = 0; p < hw; ++p) acc += plane[p];
          db_acc[c] += acc;
        }
        // d_w += d_y * cols^T
        const Real* src = x.data() + item * c_in * hw;
        if (!pointwise) {
          detail::im2col(src, c_in, h, wd, spec, cols.data());
          src = cols.data();
        }
        detail::matmul_abt_rows(dy, src, dw_item.data(), spec.out_channels, hw,
                                rows, 0, spec.out_channels);
        for (std::size_t i = 0; i < dw_item.size(); ++i) dw_acc[i] += dw_item[i];
        // d_cols = w^T * d_y, scattered back (or written directly for 1x1)
        Real* dx_item = g.d_x.data() + item * c_in * hw;
        if (pointwise) {
          detail::matmul_atb_rows(w.data(), dy, dx_item, rows,
                                  spec.out_channels, hw, 0, rows);
        } else {
          detail::matmul_atb_rows(w.data(), dy, dcols.data(), rows,
                                  spec.out_channels, hw, 0, rows);
          detail::col2im_add(dcols.data(), c_in, h, wd, spec, dx_item);
        }
      }
    }
  });
  for (std::size_t chunk = 0; chunk < chunks; ++chunk) {
    for (std::size_t i = 0; i < w.numel(); ++i) g.d_w[i] += dw_chunks[chunk][i];
    for (std::size_t c = 0; c < spec.out_channels; ++c)
      g.d_b[c] += db_chunks[chunk][c];
  }
  return g;
}

// ---------------------------------------------------------------------------
// Per-channel batch normalization over (N, H, W).
// ---------------------------------------------------------------------------

constexpr Real kBatchNormEps = 1e-5;
constexpr Real kBatchNormMomentum = 0.9;  // running <- m*running + (1-m)*batch

struct BatchNormCache {
  Tensor x_hat;                 // normalized input, same shape as x
  std::vector<Real> inv_std;    // per channel
  std::size_t per_channel = 0;  // N*H*W
};

// Training mode normalizes with batch statistics and folds them into the
// running estimates; eval mode normalizes with the running estimates.
inline Tensor batchnorm2d_forward(const Tensor& x, const Tensor& gamma,
                                  const Tensor& beta, Tensor& running_mean,
                                  Tensor& running_var, bool training,
                                  BatchNormCache* cache,
                                  Real eps = kBatchNormEps,
                                  Real momentum = kBatchNormMomentum) {
  if (x.rank() != 4) throw DimensionError("batchnorm2d: input must be [N,C,H,W]");
  const std::size_t n = x.extent(0), c = x.extent(1), h = x.extent(2),
                    w = x.extent(3);
  if (c != gamma.numel()) throw DimensionError("batchnorm2d: channel mismatch");
  const std::size_t hw = h * w, m = n * hw;
  if (m == 0) throw DimensionError("batchnorm2d: zero elements per channel");

  Tensor y(x.shape());
  if (cache) {
    cache->x_hat = Tensor(x.shape());
    cache->inv_std.assign(c, 0);
    cache->per_channel = m;
  }
  // Channels are independent; each one is handled start-to-finish by a single
  // thread, so the statistics sums keep a fixed order.
  parallel_rows(c, x.numel(), [&](std::size_t ch0, std::size_t ch1) {
    for (std::size_t ch = ch0; ch < ch1; ++ch) {
      Real mean, var;
      if (training) {
        Real s = 0;
        for (std::size_t item = 0; item < n; ++item) {
          const Real* plane = x.data() + (item * c + ch) * hw;
          for (std::size_t pidx = 0; pidx < hw; ++pidx) s += plane[pidx];
        }
        mean = s / static_cast<Real>(m);
        Real s2 = 0;
        for (std::size_t item = 0; item < n; ++item) {
          const Real* plane = x.data() + (item * c + ch) * hw;
          for (std::size_t pidx = 0; pidx < hw; ++pidx) {
            const Real d = plane[pidx] - mean;
            s2 += d * d;
          }
        }
        var = s2 / static_cast<Real>(m);  // biased
        running_mean[ch] = momentum * running_mean[ch] + (1 - momentum) * mean;
        running_var[ch] = momentum * running_var[ch] + (1 - momentum) * var;
      } else {
        mean = running_mean[ch];
        var = running_var[ch];
      }
      const Real inv_std = 1.0 / std::sqrt(var + eps);
      if (cache) cache->inv_std[ch] = inv_std;
      const Real g = gamma[ch], b = beta[ch];
      for (std::size_t item = 0; item < n; ++item) {
        const Real* xp = x.data() + (item * c + ch) * hw;
        Real* yp = y.data() + (item * c + ch) * hw;
        Real* xh = cache ? cache->x_hat.data() + (item * c + ch) * hw : nullptr;
        for (std::size_t pidx = 0; pidx < hw; ++pidx) {
          const Real hat = (xp[pidx] - mean) * inv_std;
          if (xh) xh[pidx] = hat;
          yp[pidx] = g * hat + b;
        }
      }
    }
  });
  return y;
}

struct BatchNormGrads {
  Tensor d_x;
  Tensor d_gamma;
  Tensor d_beta;
};

// Backward through the batch statistics (training-mode normalization).
inline BatchNormGrads batchnorm2d_backward(const BatchNormCache& cache,
                                           const Tensor& gamma,
                                           const Tensor& d_out) {
  const Shape& s = d_out.shape();
  const std::size_t n = s[0], c = s[1], hw = s[2] * s[3];
  const Real m = static_cast<Real>(cache.per_channel);
  BatchNormGrads g{Tensor(s), Tensor({c}), Tensor({c})};
  parallel_rows(c, d_out.numel(), [&](std::size_t ch0, std::size_t ch1) {
    for (std::size_t ch = ch0; ch < ch1; ++ch) {
      Real sum_dy = 0, sum_dy_xhat = 0;
      for (std::size_t item = 0; item < n; ++item) {
        const Real* dy = d_out.data() + (item * c + ch) * hw;
        const Real* xh = cache.x_hat.data() + (item * c + ch) * hw;
        for (std::size_t pidx = 0; pidx < hw; ++pidx) {
          sum_dy += dy[pidx];
          sum_dy_xhat += dy[pidx] * xh[pidx];
        }
      }
      g.d_beta[ch] = sum_dy;
      g.d_gamma[ch] = sum_dy_xhat;
      // d_x = gamma*inv_std/m * (m*dy - sum(dy) - x_hat*sum(dy*x_hat))
      const Real k = gamma[ch] * cache.inv_std[ch] / m;
      for (std::size_t item = 0; item < n; ++item) {
        const Real* dy = d_out.data() + (item * c + ch) * hw;
        const Real* xh = cache.x_hat.data() + (item * c + ch) * hw;
        Real* dx = g.d_x.data() + (item * c + ch) * hw;
        for (std::size_t pidx = 0; pidx < hw; ++pidx)
          dx[pidx] = k * (m * dy[pidx] - sum_dy - xh[pidx] * sum_dy_xhat);
      }
    }
  });
  return g;
}

// ---------------------------------------------------------------------------
// relu
// ---------------------------------------------------------------------------

inline Tensor relu_forward(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.vec()) v = v > 0 ? v : 0;
  return y;
}

inline Tensor relu_backward(const Tensor& x, const Tensor& d_out) {
  Tensor dx = d_out;
  for (std::size_t i = 0; i < dx.numel(); ++i)
    if (!(x[i] > 0)) dx[i] = 0;
  return dx;
}

// ---------------------------------------------------------------------------
// Non-overlapping max pooling; stride equals the window. Trailing rows or
// columns that do not fill a window are dropped, so two width-2 pools give
// exactly floor(W/4) output columns for any W.
// ---------------------------------------------------------------------------

struct MaxPoolCache {
  Shape in_shape;
  std::vector<std::size_t> argmax;  // flat input index per output element
};

inline Tensor maxpool2d_forward(const Tensor& x, std::size_t pool_h,
                                std::size_t pool_w, MaxPoolCache* cache) {
  if (x.rank() != 4) throw DimensionError("maxpool2d: input must be [N,C,H,W]");
  const std::size_t n = x.extent(0), c = x.extent(1), h = x.extent(2),
                    w = x.extent(3);
  const std::size_t oh = h / pool_h, ow = w / pool_w;
  if (oh == 0 || ow == 0) throw DimensionError("maxpool2d: window larger than input");
  Tensor y({n, c, oh, ow});
  if (cache) {
    cache->in_shape = x.shape();
    cache->argmax.assign(y.numel(), 0);
  }
  std::size_t out_idx = 0;
  for (std::size_t item = 0; item < n; ++item) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const Real* plane = x.data() + (item * c + ch) * h * w;
      const std::size_t plane_base = (item * c + ch) * h * w;
      for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j, ++out_idx) {
          Real best = plane[i * pool_h * w + j * pool_w];
          std::size_t best_idx = plane_base + i * pool_h * w + j * pool_w;
          for (std::size_t pi = 0; pi < pool_h; ++pi) {
            const std::size_t row = i * pool_h + pi;
            for (std::size_t pj = 0; pj < pool_w; ++pj) {
              const std::size_t col = j * pool_w + pj;
              const Real v = plane[row * w + col];
              if (v > best) {  // strict: ties keep the first (row-major) hit
                best = v;
                best_idx = plane_base + row * w + col;
              }
            }
          }
          y[out_idx] = best;
          if (cache) cache->argmax[out_idx] = best_idx;
        }
      }
    }
  }
  return y;
}

inline Tensor maxpool2d_backward(const MaxPoolCache& cache, const Tensor& d_out) {
  Tensor dx(cache.in_shape);
  for (std::size_t i = 0; i < d_out.numel(); ++i)
    dx[cache.argmax[i]] += d_out[i];
  return dx;
}

// ---------------------------------------------------------------------------
// Affine map on the trailing axis: y = x*W + b with W [D_in, D_out].
// Leading axes are flattened.
// ---------------------------------------------------------------------------

inline Tensor linear_forward(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (w.rank() != 2) throw DimensionError("linear: weight must be rank 2");
  const std::size_t d_in = w.extent(0), d_out = w.extent(1);
  if (x.rank() < 1 || x.shape().back() != d_in)
    throw DimensionError("linear: trailing input extent " +
                         shape_str(x.shape()) + " does not match weight " +
                         shape_str(w.shape()));
  if (b.shape() != Shape{d_out}) throw DimensionError("linear: bias shape mismatch");
  const std::size_t m = x.numel() / d_in;
  Shape out_shape = x.shape();
  out_shape.back() = d_out;
  Tensor y(out_shape);
  matmul_into(x.data(), w.data(), y.data(), m, d_in, d_out);
  for (std::size_t i = 0; i < m; ++i) {
    Real* row = y.data() + i * d_out;
    for (std::size_t j = 0; j < d_out; ++j) row[j] += b[j];
  }
  return y;
}

struct LinearGrads {
  Tensor d_x;
  Tensor d_w;
  Tensor d_b;
};

inline LinearGrads linear_backward(const Tensor& x, const Tensor& w,
                                   const Tensor& d_out) {
  const std::size_t d_in = w.extent(0), d_out_dim = w.extent(1);
  const std::size_t m = x.numel() / d_in;
  LinearGrads g{Tensor(x.shape()), Tensor(w.shape()), Tensor({d_out_dim})};
  matmul_abt_into(d_out.data(), w.data(), g.d_x.data(), m, d_out_dim, d_in);
  matmul_atb_into(x.data(), d_out.data(), g.d_w.data(), d_in, m, d_out_dim);
  for (std::size_t i = 0; i < m; ++i) {
    const Real* row = d_out.data() + i * d_out_dim;
    for (std::size_t j = 0; j < d_out_dim; ++j) g.d_b[j] += row[j];
  }
  return g;
}

// ---------------------------------------------------------------------------
// Row-wise log-softmax over the trailing axis, max-subtracted for stability.
// ---------------------------------------------------------------------------

inline Tensor log_softmax(const Tensor& x) {
  if (x.rank() < 1) throw DimensionError("log_softmax: rank must be >= 1");
  const std::size_t v = x.shape().back();
  const std::size_t rows = x.numel() / v;
  Tensor y(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* in = x.data() + r * v;
    Real* out = y.data() + r * v;
    Real mx = in[0];
    for (std::size_t j = 1; j < v; ++j) mx = std::max(mx, in[j]);
    Real sum = 0;
    for (std::size_t j = 0; j < v; ++j) sum += std::exp(in[j] - mx);
    const Real lse = mx + std::log(sum);
    for (std::size_t j = 0; j < v; ++j) out[j] = in[j] - lse;
  }
  return y;
}

}  // namespace omr

#endif  // OMR_NN_HPP_
