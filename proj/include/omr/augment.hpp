// include/omr/augment.hpp

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
// Stochastic degradation pipeline. Each op fires independently with its
// configured probability; fired ops compose on the running image. Images are
// [1, H, W] with background 1.0 and ink 0.0; every op preserves the shape and
// clamps its output to [0,1]. Labels never pass through here.

#ifndef OMR_AUGMENT_HPP_
#define OMR_AUGMENT_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "omr/rng.hpp"
#include "omr/tensor.hpp"

namespace omr {

enum class AugmentKind {
  BrightnessContrastGamma,
  Blur,
  Compression,
  Erosion,
  Dilation,
  RotateShear,
  CoherentNoise,
  GaussianNoise,
  Elastic,
  Scratches,
};

struct AugmentOp {
  AugmentKind kind;
  std::string name;
  double probability = 0;
  std::map<std::string, double> params;

  double get(const std::string& key) const {
    auto it = params.find(key);
    if (it == params.end())
      throw DimensionError("augment op '" + name + "' has no parameter " + key);
    return it->second;
  }
};

struct AugmentConfig {
  std::vector<AugmentOp> ops;

  AugmentOp* find(const std::string& name) {
    for (auto& op : ops)
      if (op.name == name) return &op;
    return nullptr;
  }

  void set_all_probabilities(double p) {
    for (auto& op : ops) op.probability = p;
  }

  static AugmentConfig defaults() {
    AugmentConfig cfg;
    cfg.ops = {
        {AugmentKind::BrightnessContrastGamma,
         "brightness_contrast_gamma",
         0.9,
         {{"brightness_lo", -0.15},
          {"brightness_hi", 0.15},
          {"contrast_lo", 0.7},
          {"contrast_hi", 1.3},
          {"gamma_lo", 0.7},
          {"gamma_hi", 1.4}}},
        {AugmentKind::Blur, "blur", 0.5, {{"sigma_lo", 0.3}, {"sigma_hi", 1.2}}},
        {AugmentKind::Compression,
         "compression",
         0.5,
         {{"quality_lo", 40}, {"quality_hi", 90}}},
        {AugmentKind::Erosion, "erosion", 0.08, {}},
        {AugmentKind::Dilation, "dilation", 0.08, {}},
        {AugmentKind::RotateShear,
         "rotate_shear",
         0.6,
         {{"angle_deg_lo", -2.0},
          {"angle_deg_hi", 2.0},
          {"shear_lo", -0.05},
          {"shear_hi", 0.05}}},
        {AugmentKind::CoherentNoise,
         "coherent_noise",
         0.25,
         {{"amplitude_lo", 0.05}, {"amplitude_hi", 0.15}}},
        {AugmentKind::GaussianNoise,
         "gaussian_noise",
         0.25,
         {{"sigma_lo", 0.01}, {"sigma_hi", 0.05}}},
        {AugmentKind::Elastic,
         "elastic",
         0.15,
         {{"alpha_lo", 4.0}, {"alpha_hi", 10.0}, {"sigma_lo", 4.0}, {"sigma_hi", 8.0}}},
        {AugmentKind::Scratches,
         "scratches",
         0.05,
         {{"count_lo", 1}, {"count_hi", 3}}},
    };
    return cfg;
  }
};

namespace augdetail {

inline void clamp01(Tensor& img) {
  for (auto& v : img.vec()) v = std::clamp<Real>(v, 0.0, 1.0);
}

// Separable gaussian smoothing of a raw field, replicated borders.
inline void smooth_field(std::vector<Real>& f, std::size_t w, std::size_t h,
                         Real sigma, long radius) {
  std::vector<Real> kernel(static_cast<std::size_t>(2 * radius + 1));
  Real sum = 0;
  for (long i = -radius; i <= radius; ++i) {
    const Real v = std::exp(-0.5 * static_cast<Real>(i * i) / (sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& v : kernel) v /= sum;
  std::vector<Real> tmp(f.size());
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      Real acc = 0;
      for (long i = -radius; i <= radius; ++i) {
        const long xx = std::clamp<long>(static_cast<long>(x) + i, 0,
                                         static_cast<long>(w) - 1);
        acc += kernel[static_cast<std::size_t>(i + radius)] *
               f[y * w + static_cast<std::size_t>(xx)];
      }
      tmp[y * w + x] = acc;
    }
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      Real acc = 0;
      for (long i = -radius; i <= radius; ++i) {
        const long yy = std::clamp<long>(static_cast<long>(y) + i, 0,
                                         static_cast<long>(h) - 1);
        acc += kernel[static_cast<std::size_t>(i + radius)] *
               tmp[static_cast<std::size_t>(yy) * w + x];
      }
      f[y * w + x] = acc;
    }
}

inline Real sample_bilinear(const Tensor& img, Real x, Real y, Real fill) {
  const std::size_t h = img.extent(1), w = img.extent(2);
  if (x < -1.0 || y < -1.0 || x > static_cast<Real>(w) || y > static_cast<Real>(h))
    return fill;
  const long x0 = static_cast<long>(std::floor(x));
  const long y0 = static_cast<long>(std::floor(y));
  const Real wx = x - static_cast<Real>(x0);
  const Real wy = y - static_cast<Real>(y0);
  auto pix = [&](long xx, long yy) -> Real {
    if (xx < 0 || yy < 0 || xx >= static_cast<long>(w) || yy >= static_cast<long>(h))
      return fill;
    return img(0, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
  };
  return (1 - wy) * ((1 - wx) * pix(x0, y0) + wx * pix(x0 + 1, y0)) +
         wy * ((1 - wx) * pix(x0, y0 + 1) + wx * pix(x0 + 1, y0 + 1));
}

}  // namespace augdetail

// --- individual transforms (pure, parameters explicit) ----------------------

inline Tensor adjust_brightness_contrast_gamma(const Tensor& img, Real brightness,
                                               Real contrast, Real gamma) {
  Tensor out = img;
  for (auto& v : out.vec()) {
    v = std::clamp<Real>((v - 0.5) * contrast + 0.5 + brightness, 0.0, 1.0);
    v = std::pow(v, gamma);
  }
  augdetail::clamp01(out);
  return out;
}

// Gaussian kernel capped at 5x5.
inline Tensor gaussian_blur(const Tensor& img, Real sigma) {
  if (sigma <= 0) return img;
  const long radius = std::min<long>(2, std::max<long>(1, static_cast<long>(
                                            std::ceil(2.0 * sigma))));
  Tensor out = img;
  augdetail::smooth_field(out.vec(), img.extent(2), img.extent(1), sigma, radius);
  augdetail::clamp01(out);
  return out;
}

// Blocky quantization noise via an 8x8 DCT with the standard luminance
// table; the goal is the artifact pattern, not bit-exact codec output.
inline Tensor block_dct_compress(const Tensor& img, Real quality) {
  static const int kLumaQ[64] = {
      16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
      14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
      18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
      49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
  quality = std::clamp<Real>(quality, 1.0, 100.0);
  const Real scale = quality < 50 ? 5000.0 / quality : 200.0 - 2.0 * quality;
  Real table[64];
  for (int i = 0; i < 64; ++i)
    table[i] = std::clamp<Real>(
        std::floor((kLumaQ[i] * scale + 50.0) / 100.0), 1.0, 255.0);

  static const auto dct = [] {
    std::array<Real, 64> d{};
    for (int k = 0; k < 8; ++k)
      for (int n = 0; n < 8; ++n)
        d[static_cast<std::size_t>(k * 8 + n)] =
            (k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0)) *
            std::cos((2.0 * n + 1.0) * k * 3.14159265358979323846 / 16.0);
    return d;
  }();

  const std::size_t h = img.extent(1), w = img.extent(2);
  Tensor out = img;
  Real block[64], tmp[64];
  for (std::size_t by = 0; by < h; by += 8)
    for (std::size_t bx = 0; bx < w; bx += 8) {
      for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t x = 0; x < 8; ++x) {
          const std::size_t sy = std::min(by + y, h - 1);  // edge replicate
          const std::size_t sx = std::min(bx + x, w - 1);
          block[y * 8 + x] = img(0, sy, sx) * 255.0 - 128.0;
        }
      // C = D * B * D^T, quantize, B' = D^T * C * D
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
          Real acc = 0;
          for (int k = 0; k < 8; ++k) acc += dct[i * 8 + k] * block[k * 8 + j];
          tmp[i * 8 + j] = acc;
        }
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
          Real acc = 0;
          for (int k = 0; k < 8; ++k) acc += tmp[i * 8 + k] * dct[j * 8 + k];
          const Real q = table[i * 8 + j];
          block[i * 8 + j] = std::round(acc / q) * q;
        }
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
          Real acc = 0;
          for (int k = 0; k < 8; ++k) acc += dct[k * 8 + i] * block[k * 8 + j];
          tmp[i * 8 + j] = acc;
        }
      for (std::size_t y = 0; y < 8 && by + y < h; ++y)
        for (std::size_t x = 0; x < 8 && bx + x < w; ++x) {
          Real acc = 0;
          for (int k = 0; k < 8; ++k)
            acc += tmp[y * 8 + k] * dct[k * 8 + x];
          out(0, by + y, bx + x) =
              std::clamp<Real>((acc + 128.0) / 255.0, 0.0, 1.0);
        }
    }
  return out;
}

// Morphology acts on the dark ink as foreground: eroding ink thins strokes
// (3x3 max filter in white-is-1 value space), dilating ink thickens them.
inline Tensor morph_filter(const Tensor& img, bool erode_ink) {
  const std::size_t h = img.extent(1), w = img.extent(2);
  Tensor out(img.shape());
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      Real best = img(0, y, x);
      for (long dy = -1; dy <= 1; ++dy)
        for (long dx = -1; dx <= 1; ++dx) {
          const long yy = std::clamp<long>(static_cast<long>(y) + dy, 0,
                                           static_cast<long>(h) - 1);
          const long xx = std::clamp<long>(static_cast<long>(x) + dx, 0,
                                           static_cast<long>(w) - 1);
          const Real v = img(0, static_cast<std::size_t>(yy),
                             static_cast<std::size_t>(xx));
          best = erode_ink ? std::max(best, v) : std::min(best, v);
        }
      out(0, y, x) = best;
    }
  return out;
}

inline Tensor erode_ink(const Tensor& img) { return morph_filter(img, true); }
inline Tensor dilate_ink(const Tensor& img) { return morph_filter(img, false); }

inline Tensor rotate_shear(const Tensor& img, Real angle_deg, Real shear) {
  const std::size_t h = img.extent(1), w = img.extent(2);
  const Real theta = angle_deg * 3.14159265358979323846 / 180.0;
  const Real c = std::cos(theta), s = std::sin(theta);
  // forward map A = R(theta) * Shear(shear); det(A) == 1
  const Real a11 = c, a12 = shear * c - s;
  const Real a21 = s, a22 = shear * s + c;
  const Real cx = static_cast<Real>(w - 1) / 2.0, cy = static_cast<Real>(h - 1) / 2.0;
  Tensor out(img.shape());
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const Real dx = static_cast<Real>(x) - cx, dy = static_cast<Real>(y) - cy;
      const Real sx = a22 * dx - a12 * dy + cx;  // A^{-1} for det 1
      const Real sy = -a21 * dx + a11 * dy + cy;
      out(0, y, x) = augdetail::sample_bilinear(img, sx, sy, 1.0);
    }
  augdetail::clamp01(out);
  return out;
}

// Multi-octave bilinear value noise, zero-mean-ish, added to the image.
inline Tensor add_value_noise(const Tensor& img, Real amplitude, Rng& rng) {
  const std::size_t h = img.extent(1), w = img.extent(2);
  std::vector<Real> field(h * w, 0.0);
  Real weight = 1.0, weight_sum = 0.0;
  for (int octave = 0; octave < 3; ++octave) {
    const std::size_t cell = std::max<std::size_t>(2, 16u >> octave);
    const std::size_t gw = w / cell + 2, gh = h / cell + 2;
    std::vector<Real> grid(gw * gh);
    for (auto& g : grid) g = rng.uniform(-1.0, 1.0);
    for (std::size_t y = 0; y < h; ++y) {
      const Real fy = static_cast<Real>(y) / static_cast<Real>(cell);
      const std::size_t y0 = static_cast<std::size_t>(fy);
      const Real wy = fy - static_cast<Real>(y0);
      for (std::size_t x = 0; x < w; ++x) {
        const Real fx = static_cast<Real>(x) / static_cast<Real>(cell);
        const std::size_t x0 = static_cast<std::size_t>(fx);
        const Real wx = fx - static_cast<Real>(x0);
        const Real v =
            (1 - wy) * ((1 - wx) * grid[y0 * gw + x0] + wx * grid[y0 * gw + x0 + 1]) +
            wy * ((1 - wx) * grid[(y0 + 1) * gw + x0] +
                  wx * grid[(y0 + 1) * gw + x0 + 1]);
        field[y * w + x] += weight * v;
      }
    }
    weight_sum += weight;
    weight *= 0.5;
  }
  Tensor out = img;
  for (std::size_t i = 0; i < field.size(); ++i)
    out[i] += amplitude * field[i] / weight_sum;
  augdetail::clamp01(out);
  return out;
}

inline Tensor add_gaussian_noise(const Tensor& img, Real sigma, Rng& rng) {
  Tensor out = img;
  if (sigma > 0)
    for (auto& v : out.vec()) v += rng.gaussian(0.0, sigma);
  augdetail::clamp01(out);
  return out;
}

// Smoothed random displacement field, magnitude alpha px after max-abs
// normalization, smoothing sigma px.
inline Tensor elastic_deform(const Tensor& img, Real alpha, Real sigma, Rng& rng) {
  const std::size_t h = img.extent(1), w = img.extent(2);
  std::vector<Real> dx(h * w), dy(h * w);
  for (auto& v : dx) v = rng.uniform(-1.0, 1.0);
  for (auto& v : dy) v = rng.uniform(-1.0, 1.0);
  const long radius = std::max<long>(1, static_cast<long>(std::ceil(2.5 * sigma)));
  augdetail::smooth_field(dx, w, h, sigma, radius);
  augdetail::smooth_field(dy, w, h, sigma, radius);
  Real peak = 0;
  for (std::size_t i = 0; i < dx.size(); ++i)
    peak = std::max({peak, std::abs(dx[i]), std::abs(dy[i])});
  if (peak > 0) {
    const Real k = alpha / peak;
    for (std::size_t i = 0; i < dx.size(); ++i) {
      dx[i] *= k;
      dy[i] *= k;
    }
  }
  Tensor out(img.shape());
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t i = y * w + x;
      out(0, y, x) = augdetail::sample_bilinear(
          img, static_cast<Real>(x) + dx[i], static_cast<Real>(y) + dy[i], 1.0);
    }
  augdetail::clamp01(out);
  return out;
}

// 1-3 thin light or dark line segments.
inline Tensor draw_scratches(const Tensor& img, int count, Rng& rng) {
  const std::size_t h = img.extent(1), w = img.extent(2);
  Tensor out = img;
  for (int k = 0; k < count; ++k) {
    const Real x0 = rng.uniform(0.0, static_cast<Real>(w - 1));
    const Real y0 = rng.uniform(0.0, static_cast<Real>(h - 1));
    const Real angle = rng.uniform(0.0, 6.283185307179586);
    const Real len = rng.uniform(10.0, 40.0);
    const long thickness = rng.uniform_int(1, 2);
    const Real color = rng.uniform() < 0.5 ? 1.0 : 0.0;
    const Real step_x = std::cos(angle) * 0.5, step_y = std::sin(angle) * 0.5;
    Real x = x0, y = y0;
    for (Real traveled = 0; traveled < len; traveled += 0.5) {
      for (long oy = 0; oy < thickness; ++oy)
        for (long ox = 0; ox < thickness; ++ox) {
          const long px = static_cast<long>(std::lround(x)) + ox;
          const long py = static_cast<long>(std::lround(y)) + oy;
          if (px >= 0 && py >= 0 && px < static_cast<long>(w) &&
              py < static_cast<long>(h))
            out(0, static_cast<std::size_t>(py), static_cast<std::size_t>(px)) = color;
        }
      x += step_x;
      y += step_y;
    }
  }
  return out;
}

// --- dispatch ---------------------------------------------------------------

inline Tensor augment_op(const AugmentOp& op, const Tensor& img, Rng& rng) {
  switch (op.kind) {
    case AugmentKind::BrightnessContrastGamma: {
      const Real b = rng.uniform(op.get("brightness_lo"), op.get("brightness_hi"));
      const Real c = rng.uniform(op.get("contrast_lo"), op.get("contrast_hi"));
      const Real g = rng.uniform(op.get("gamma_lo"), op.get("gamma_hi"));
      return adjust_brightness_contrast_gamma(img, b, c, g);
    }
    case AugmentKind::Blur:
      return gaussian_blur(img, rng.uniform(op.get("sigma_lo"), op.get("sigma_hi")));
    case AugmentKind::Compression:
      return block_dct_compress(
          img, rng.uniform(op.get("quality_lo"), op.get("quality_hi")));
    case AugmentKind::Erosion:
      return erode_ink(img);
    case AugmentKind::Dilation:
      return dilate_ink(img);
    case AugmentKind::RotateShear: {
      const Real a = rng.uniform(op.get("angle_deg_lo"), op.get("angle_deg_hi"));
      const Real s = rng.uniform(op.get("shear_lo"), op.get("shear_hi"));
      return rotate_shear(img, a, s);
    }
    case AugmentKind::CoherentNoise:
      return add_value_noise(
          img, rng.uniform(op.get("amplitude_lo"), op.get("amplitude_hi")), rng);
    case AugmentKind::GaussianNoise:
      return add_gaussian_noise(
          img, rng.uniform(op.get("sigma_lo"), op.get("sigma_hi")), rng);
    case AugmentKind::Elastic: {
      const Real alpha = rng.uniform(op.get("alpha_lo"), op.get("alpha_hi"));
      const Real sigma = rng.uniform(op.get("sigma_lo"), op.get("sigma_hi"));
      return elastic_deform(img, alpha, sigma, rng);
    }
    case AugmentKind::Scratches: {
      const int n = static_cast<int>(rng.uniform_int(
          static_cast<long>(op.get("count_lo")), static_cast<long>(op.get("count_hi"))));
      return draw_scratches(img, n, rng);
    }
  }
  throw DimensionError("augment: unknown op kind");
}

// Ops fire independently in config order; `fired`, when given, records which
// ops were applied.
inline Tensor apply_pipeline(Tensor img, const AugmentConfig& cfg, Rng& rng,
                             std::vector<bool>* fired = nullptr) {
  if (fired) fired->assign(cfg.ops.size(), false);
  for (std::size_t i = 0; i < cfg.ops.size(); ++i) {
    const bool fire = rng.uniform() < cfg.ops[i].probability;
    if (!fire) continue;
    if (fired) (*fired)[i] = true;
    img = augment_op(cfg.ops[i], img, rng);
  }
  return img;
}

// Per-sample derived seed so parallel augmentation never changes results.
inline std::uint64_t augment_seed(std::uint64_t global_seed,
                                  const std::string& sample_id,
                                  std::uint64_t iteration) {
  return hash_combine(hash_str(global_seed, sample_id), iteration);
}

}  // namespace omr

#endif  // OMR_AUGMENT_HPP_
