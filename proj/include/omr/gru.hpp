// include/omr/gru.hpp

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
// Gated recurrent unit. The update convention is the original formulation:
//   z = sigmoid(x Wz + h Uz + bz)
//   r = sigmoid(x Wr + h Ur + br)
//   hc = tanh(x Wh + (r .* h) Uh + bh)      (reset applied before Uh)
//   h' = (1 - z) .* h + z .* hc
// The two common variants are not interchangeable at the checkpoint level,
// so this one is fixed here and everywhere that loads parameters.

#ifndef OMR_GRU_HPP_
#define OMR_GRU_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "omr/encoder.hpp"  // Param / visitors
#include "omr/rng.hpp"
#include "omr/tensor.hpp"

namespace omr {

inline Real sigmoid(Real x) { return 1.0 / (1.0 + std::exp(-x)); }

struct GruParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  Param Wz, Wr, Wh;  // [D, H]
  Param Uz, Ur, Uh;  // [H, H]
  Param bz, br, bh;  // [H]

  void init(std::size_t d, std::size_t h, Rng& rng) {
    input_dim = d;
    hidden_dim = h;
    auto uniform_init = [&](Param& p, Shape shape, std::size_t fan_in) {
      p.init(std::move(shape));
      const Real bound = std::sqrt(1.0 / static_cast<Real>(fan_in));
      for (auto& v : p.v.vec()) v = rng.uniform(-bound, bound);
    };
    uniform_init(Wz, {d, h}, d);
    uniform_init(Wr, {d, h}, d);
    uniform_init(Wh, {d, h}, d);
    uniform_init(Uz, {h, h}, h);
    uniform_init(Ur, {h, h}, h);
    uniform_init(Uh, {h, h}, h);
    bz.init({h});
    br.init({h});
    bh.init({h});
  }

  void visit_params(const std::string& prefix, const ParamVisitor& f) {
    f(prefix + ".Wz", Wz);
    f(prefix + ".Wr", Wr);
    f(prefix + ".Wh", Wh);
    f(prefix + ".Uz", Uz);
    f(prefix + ".Ur", Ur);
    f(prefix + ".Uh", Uh);
    f(prefix + ".bz", bz);
    f(prefix + ".br", br);
    f(prefix + ".bh", bh);
  }
};

struct GruSeqCache {
  Tensor xs;      // [T, D]
  Tensor h_prev;  // [T, H], hidden state entering step t
  Tensor z, r, hc, rh;  // [T, H]
};

// xs: [T, D] -> [T, H]; h0 defaults to zeros.
inline Tensor gru_sequence_forward(const Tensor& xs, GruParams& p,
                                   GruSeqCache* cache,
                                   const Tensor* h0 = nullptr) {
  if (xs.rank() != 2 || xs.extent(1) != p.input_dim)
    throw DimensionError("gru: input must be [T," + std::to_string(p.input_dim) + "]");
  const std::size_t t_len = xs.extent(0), d = p.input_dim, h = p.hidden_dim;
  if (t_len == 0) throw DimensionError("gru: empty sequence");

  // Input contributions for all gates, batched over time.
  Tensor az(Shape{t_len, h}), ar(Shape{t_len, h}), ah(Shape{t_len, h});
  matmul_into(xs.data(), p.Wz.v.data(), az.data(), t_len, d, h);
  matmul_into(xs.data(), p.Wr.v.data(), ar.data(), t_len, d, h);
  matmul_into(xs.data(), p.Wh.v.data(), ah.data(), t_len, d, h);

  Tensor ys({t_len, h});
  std::vector<Real> hidden(h, 0.0);
  if (h0) {
    if (h0->numel() != h) throw DimensionError("gru: h0 size mismatch");
    std::copy(h0->data(), h0->data() + h, hidden.begin());
  }
  if (cache) {
    cache->xs = xs;
    cache->h_prev = Tensor({t_len, h});
    cache->z = Tensor({t_len, h});
    cache->r = Tensor({t_len, h});
    cache->hc = Tensor({t_len, h});
    cache->rh = Tensor({t_len, h});
  }
  std::vector<Real> uz(h), ur(h), uh(h), rh(h);
  for (std::size_t t = 0; t < t_len; ++t) {
    matmul_into(hidden.data(), p.Uz.v.data(), uz.data(), 1, h, h);
    matmul_into(hidden.data(), p.Ur.v.data(), ur.data(), 1, h, h);
    Real* zt = az.data() + t * h;
    Real* rt = ar.data() + t * h;
    Real* ht = ah.data() + t * h;
    for (std::size_t j = 0; j < h; ++j) {
      zt[j] = sigmoid(zt[j] + uz[j] + p.bz.v[j]);
      rt[j] = sigmoid(rt[j] + ur[j] + p.br.v[j]);
      rh[j] = rt[j] * hidden[j];
    }
    matmul_into(rh.data(), p.Uh.v.data(), uh.data(), 1, h, h);
    Real* y = ys.data() + t * h;
    for (std::size_t j = 0; j < h; ++j) {
      const Real hc = std::tanh(ht[j] + uh[j] + p.bh.v[j]);
      if (cache) {
        cache->h_prev(t, j) = hidden[j];
        cache->z(t, j) = zt[j];
        cache->r(t, j) = rt[j];
        cache->hc(t, j) = hc;
        cache->rh(t, j) = rh[j];
      }
      y[j] = (1.0 - zt[j]) * hidden[j] + zt[j] * hc;
    }
    std::copy(y, y + h, hidden.begin());
  }
  return ys;
}

// Backward through time. Accumulates parameter gradients into p, returns
// d_xs; optionally reports the gradient w.r.t. the initial hidden state.
inline Tensor gru_sequence_backward(const GruSeqCache& cache, GruParams& p,
                                    const Tensor& d_ys, Tensor* d_h0 = nullptr) {
  const std::size_t t_len = cache.xs.extent(0), d = p.input_dim,
                    h = p.hidden_dim;
  Tensor daz(Shape{t_len, h}), dar(Shape{t_len, h}), dah(Shape{t_len, h});
  std::vector<Real> dh(h, 0.0), drh(h), tmp(h);
  for (std::size_t t = t_len; t-- > 0;) {
    const Real* dy = d_ys.data() + t * h;
    for (std::size_t j = 0; j < h; ++j) dh[j] += dy[j];
    Real* dazt = daz.data() + t * h;
    Real* dart = dar.data() + t * h;
    Real* daht = dah.data() + t * h;
    for (std::size_t j = 0; j < h; ++j) {
      const Real z = cache.z(t, j), r = cache.r(t, j), hc = cache.hc(t, j),
                 hp = cache.h_prev(t, j);
      const Real dz = dh[j] * (hc - hp);
      const Real dhc = dh[j] * z;
      dazt[j] = dz * z * (1.0 - z);
      daht[j] = dhc * (1.0 - hc * hc);
      dh[j] *= (1.0 - z);  // direct path to h_prev
      dart[j] = r;         // stash r; finished below once drh is known
    }
    // d(r .* h_prev) = dah * Uh^T
    matmul_abt_into(daht, p.Uh.v.data(), drh.data(), 1, h, h);
    for (std::size_t j = 0; j < h; ++j) {
      const Real r = dart[j];
      const Real hp = cache.h_prev(t, j);
      const Real dr = drh[j] * hp;
      dh[j] += drh[j] * r;
      dart[j] = dr * r * (1.0 - r);
    }
    matmul_abt_into(dazt, p.Uz.v.data(), tmp.data(), 1, h, h);
    for (std::size_t j = 0; j < h; ++j) dh[j] += tmp[j];
    matmul_abt_into(dart, p.Ur.v.data(), tmp.data(), 1, h, h);
    for (std::size_t j = 0; j < h; ++j) dh[j] += tmp[j];
  }
  if (d_h0) {
    *d_h0 = Tensor({h});
    std::copy(dh.begin(), dh.end(), d_h0->data());
  }

  // Parameter gradients, batched over time.
  auto accumulate_atb = [](Param& dst, const Tensor& a, const Tensor& b,
                           std::size_t m, std::size_t k, std::size_t n) {
    std::vector<Real> buf(m * n);
    matmul_atb_into(a.data(), b.data(), buf.data(), m, k, n);
    for (std::size_t i = 0; i < buf.size(); ++i) dst.g[i] += buf[i];
  };
  accumulate_atb(p.Wz, cache.xs, daz, d, t_len, h);
  accumulate_atb(p.Wr, cache.xs, dar, d, t_len, h);
  accumulate_atb(p.Wh, cache.xs, dah, d, t_len, h);
  accumulate_atb(p.Uz, cache.h_prev, daz, h, t_len, h);
  accumulate_atb(p.Ur, cache.h_prev, dar, h, t_len, h);
  accumulate_atb(p.Uh, cache.rh, dah, h, t_len, h);
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t j = 0; j < h; ++j) {
      p.bz.g[j] += daz(t, j);
      p.br.g[j] += dar(t, j);
      p.bh.g[j] += dah(t, j);
    }

  Tensor d_xs({t_len, d});
  std::vector<Real> dx(t_len * d);
  matmul_abt_into(daz.data(), p.Wz.v.data(), d_xs.data(), t_len, h, d);
  matmul_abt_into(dar.data(), p.Wr.v.data(), dx.data(), t_len, h, d);
  for (std::size_t i = 0; i < dx.size(); ++i) d_xs[i] += dx[i];
  matmul_abt_into(dah.data(), p.Wh.v.data(), dx.data(), t_len, h, d);
  for (std::size_t i = 0; i < dx.size(); ++i) d_xs[i] += dx[i];
  return d_xs;
}

// Single-step convenience wrappers (T = 1 sequences).
inline Tensor gru_step(const Tensor& x, const Tensor& h_prev, GruParams& p,
                       GruSeqCache* cache = nullptr) {
  Tensor xs = x.reshape({1, x.numel()});
  Tensor ys = gru_sequence_forward(xs, p, cache, &h_prev);
  return ys.reshape({p.hidden_dim});
}

struct GruStepGrads {
  Tensor d_x;
  Tensor d_h_prev;
};

inline GruStepGrads gru_step_backward(const GruSeqCache& cache, GruParams& p,
                                      const Tensor& d_h) {
  Tensor d_ys = d_h.reshape({1, p.hidden_dim});
  GruStepGrads g;
  Tensor d_xs = gru_sequence_backward(cache, p, d_ys, &g.d_h_prev);
  g.d_x = d_xs.reshape({p.input_dim});
  return g;
}

// ---------------------------------------------------------------------------
// Batched recurrence over a padded batch, time-major [T, N, *]. Numerically
// identical to running the single-sequence path per item (every output
// element is produced by the same serial inner loop); parameter gradients
// are reduced by whole-tensor matmuls, so bits do not depend on the thread
// count.
// ---------------------------------------------------------------------------

struct GruBatchCache {
  Tensor xs;             // [T, N, D]
  Tensor h_prev;         // [T, N, H]
  Tensor z, r, hc, rh;   // [T, N, H]
};

inline Tensor gru_batch_forward(const Tensor& xs, GruParams& p,
                                GruBatchCache* cache) {
  if (xs.rank() != 3 || xs.extent(2) != p.input_dim)
    throw DimensionError("gru batch: input must be [T,N,D]");
  const std::size_t t_len = xs.extent(0), n = xs.extent(1), d = p.input_dim,
                    h = p.hidden_dim;
  if (t_len == 0) throw DimensionError("gru batch: empty sequence");

  const std::size_t rows = t_len * n;
  Tensor az({t_len, n, h}), ar({t_len, n, h}), ah({t_len, n, h});
  matmul_into(xs.data(), p.Wz.v.data(), az.data(), rows, d, h);
  matmul_into(xs.data(), p.Wr.v.data(), ar.data(), rows, d, h);
  matmul_into(xs.data(), p.Wh.v.data(), ah.data(), rows, d, h);

  Tensor ys({t_len, n, h});
  std::vector<Real> hidden(n * h, 0.0);
  if (cache) {
    cache->xs = xs;
    cache->h_prev = Tensor({t_len, n, h});
    cache->z = Tensor({t_len, n, h});
    cache->r = Tensor({t_len, n, h});
    cache->hc = Tensor({t_len, n, h});
    cache->rh = Tensor({t_len, n, h});
  }
  std::vector<Real> uz(n * h), ur(n * h), uh(n * h), rh(n * h);
  for (std::size_t t = 0; t < t_len; ++t) {
    matmul_into(hidden.data(), p.Uz.v.data(), uz.data(), n, h, h);
    matmul_into(hidden.data(), p.Ur.v.data(), ur.data(), n, h, h);
    Real* zt = az.data() + t * n * h;
    Real* rt = ar.data() + t * n * h;
    for (std::size_t i = 0; i < n * h; ++i) {
      zt[i] = sigmoid(zt[i] + uz[i] + p.bz.v[i % h]);
      rt[i] = sigmoid(rt[i] + ur[i] + p.br.v[i % h]);
      rh[i] = rt[i] * hidden[i];
    }
    matmul_into(rh.data(), p.Uh.v.data(), uh.data(), n, h, h);
    const Real* ht = ah.data() + t * n * h;
    Real* y = ys.data() + t * n * h;
    for (std::size_t i = 0; i < n * h; ++i) {
      const Real hc = std::tanh(ht[i] + uh[i] + p.bh.v[i % h]);
      if (cache) {
        cache->h_prev[t * n * h + i] = hidden[i];
        cache->z[t * n * h + i] = zt[i];
        cache->r[t * n * h + i] = rt[i];
        cache->hc[t * n * h + i] = hc;
        cache->rh[t * n * h + i] = rh[i];
      }
      y[i] = (1.0 - zt[i]) * hidden[i] + zt[i] * hc;
    }
    std::copy(y, y + n * h, hidden.begin());
  }
  return ys;
}

inline Tensor gru_batch_backward(const GruBatchCache& cache, GruParams& p,
                                 const Tensor& d_ys) {
  const std::size_t t_len = cache.xs.extent(0), n = cache.xs.extent(1),
                    d = p.input_dim, h = p.hidden_dim;
  const std::size_t rows = t_len * n;
  Tensor daz({t_len, n, h}), dar({t_len, n, h}), dah({t_len, n, h});
  std::vector<Real> dh(n * h, 0.0), drh(n * h), tmp(n * h);
  for (std::size_t t = t_len; t-- > 0;) {
    const Real* dy = d_ys.data() + t * n * h;
    const Real* z = cache.z.data() + t * n * h;
    const Real* r = cache.r.data() + t * n * h;
    const Real* hc = cache.hc.data() + t * n * h;
    const Real* hp = cache.h_prev.data() + t * n * h;
    Real* dazt = daz.data() + t * n * h;
    Real* dart = dar.data() + t * n * h;
    Real* daht = dah.data() + t * n * h;
    for (std::size_t i = 0; i < n * h; ++i) {
      dh[i] += dy[i];
      const Real dz = dh[i] * (hc[i] - hp[i]);
      const Real dhc = dh[i] * z[i];
      dazt[i] = dz * z[i] * (1.0 - z[i]);
      daht[i] = dhc * (1.0 - hc[i] * hc[i]);
      dh[i] *= (1.0 - z[i]);
    }
    matmul_abt_into(daht, p.Uh.v.data(), drh.data(), n, h, h);
    for (std::size_t i = 0; i < n * h; ++i) {
      const Real dr = drh[i] * hp[i];
      dh[i] += drh[i] * r[i];
      dart[i] = dr * r[i] * (1.0 - r[i]);
    }
    matmul_abt_into(dazt, p.Uz.v.data(), tmp.data(), n, h, h);
    for (std::size_t i = 0; i < n * h; ++i) dh[i] += tmp[i];
    matmul_abt_into(dart, p.Ur.v.data(), tmp.data(), n, h, h);
    for (std::size_t i = 0; i < n * h; ++i) dh[i] += tmp[i];
  }

  auto accumulate_atb = [&](Param& dst, const Tensor& a, const Tensor& b,
                            std::size_t m) {
    std::vector<Real> buf(m * h);
    matmul_atb_into(a.data(), b.data(), buf.data(), m, rows, h);
    for (std::size_t i = 0; i < buf.size(); ++i) dst.g[i] += buf[i];
  };
  accumulate_atb(p.Wz, cache.xs, daz, d);
  accumulate_atb(p.Wr, cache.xs, dar, d);
  accumulate_atb(p.Wh, cache.xs, dah, d);
  accumulate_atb(p.Uz, cache.h_prev, daz, h);
  accumulate_atb(p.Ur, cache.h_prev, dar, h);
  accumulate_atb(p.Uh, cache.rh, dah, h);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < h; ++j) {
      p.bz.g[j] += daz[i * h + j];
      p.br.g[j] += dar[i * h + j];
      p.bh.g[j] += dah[i * h + j];
    }

  Tensor d_xs({t_len, n, d});
  std::vector<Real> dx(rows * d);
  matmul_abt_into(daz.data(), p.Wz.v.data(), d_xs.data(), rows, h, d);
  matmul_abt_into(dar.data(), p.Wr.v.data(), dx.data(), rows, h, d);
  for (std::size_t i = 0; i < dx.size(); ++i) d_xs[i] += dx[i];
  matmul_abt_into(dah.data(), p.Wh.v.data(), dx.data(), rows, h, d);
  for (std::size_t i = 0; i < dx.size(); ++i) d_xs[i] += dx[i];
  return d_xs;
}

inline Tensor reverse_time(const Tensor& t) {
  const std::size_t rows = t.extent(0), cols = t.numel() / rows;
  Tensor out(t.shape());
  for (std::size_t i = 0; i < rows; ++i)
    std::copy(t.data() + i * cols, t.data() + (i + 1) * cols,
              out.data() + (rows - 1 - i) * cols);
  return out;
}

// ---------------------------------------------------------------------------
// Two-direction stack: per layer, the forward half reads the sequence
// left-to-right and the backward half reads it reversed; their outputs are
// concatenated along the feature axis.
// ---------------------------------------------------------------------------

inline Tensor reverse_rows(const Tensor& t) {
  const std::size_t rows = t.extent(0), cols = t.numel() / rows;
  Tensor out(t.shape());
  for (std::size_t i = 0; i < rows; ++i)
    std::copy(t.data() + i * cols, t.data() + (i + 1) * cols,
              out.data() + (rows - 1 - i) * cols);
  return out;
}

class BiGruStack {
 public:
  struct Layer {
    GruParams fwd, bwd;
  };
  struct LayerCache {
    GruSeqCache fwd, bwd;
  };
  struct Cache {
    std::vector<LayerCache> layers;
  };
  struct BatchLayerCache {
    GruBatchCache fwd, bwd;
  };
  struct BatchCache {
    std::vector<BatchLayerCache> layers;
  };

  BiGruStack() = default;
  BiGruStack(std::size_t input_dim, std::size_t hidden, std::size_t num_layers,
             Rng& rng)
      : hidden_(hidden) {
    layers_.resize(num_layers);
    std::size_t d = input_dim;
    for (auto& layer : layers_) {
      layer.fwd.init(d, hidden, rng);
      layer.bwd.init(d, hidden, rng);
      d = 2 * hidden;
    }
  }

  std::size_t output_dim() const { return 2 * hidden_; }
  std::size_t num_layers() const { return layers_.size(); }

  // xs: [T, D] -> [T, 2H]
  Tensor forward(const Tensor& xs, Cache* cache) {
    if (cache) cache->layers.resize(layers_.size());
    Tensor t = xs;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      LayerCache* lc = cache ? &cache->layers[i] : nullptr;
      Tensor ys_f = gru_sequence_forward(t, layers_[i].fwd, lc ? &lc->fwd : nullptr);
      Tensor ys_b = reverse_rows(gru_sequence_forward(
          reverse_rows(t), layers_[i].bwd, lc ? &lc->bwd : nullptr));
      const std::size_t t_len = t.extent(0), h = hidden_;
      Tensor merged({t_len, 2 * h});
      for (std::size_t row = 0; row < t_len; ++row) {
        std::copy(ys_f.data() + row * h, ys_f.data() + (row + 1) * h,
                  merged.data() + row * 2 * h);
        std::copy(ys_b.data() + row * h, ys_b.data() + (row + 1) * h,
                  merged.data() + row * 2 * h + h);
      }
      t = std::move(merged);
    }
    return t;
  }

  // d_out: [T, 2H] -> d_xs
  Tensor backward(const Cache& cache, const Tensor& d_out) {
    Tensor d = d_out;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      const std::size_t t_len = d.extent(0), h = hidden_;
      Tensor d_f({t_len, h}), d_b({t_len, h});
      for (std::size_t row = 0; row < t_len; ++row) {
        std::copy(d.data() + row * 2 * h, d.data() + row * 2 * h + h,
                  d_f.data() + row * h);
        std::copy(d.data() + row * 2 * h + h, d.data() + (row + 1) * 2 * h,
                  d_b.data() + row * h);
      }
      Tensor d_xs = gru_sequence_backward(cache.layers[i].fwd, layers_[i].fwd, d_f);
      d_xs += reverse_rows(gru_sequence_backward(cache.layers[i].bwd,
                                                 layers_[i].bwd,
                                                 reverse_rows(d_b)));
      d = std::move(d_xs);
    }
    return d;
  }

  // Padded-batch variants, time-major [T, N, *].
  Tensor forward_batch(const Tensor& xs, BatchCache* cache) {
    if (cache) cache->layers.resize(layers_.size());
    Tensor t = xs;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      BatchLayerCache* lc = cache ? &cache->layers[i] : nullptr;
      Tensor ys_f = gru_batch_forward(t, layers_[i].fwd, lc ? &lc->fwd : nullptr);
      Tensor ys_b = reverse_time(gru_batch_forward(
          reverse_time(t), layers_[i].bwd, lc ? &lc->bwd : nullptr));
      const std::size_t rows = t.extent(0) * t.extent(1), h = hidden_;
      Tensor merged({t.extent(0), t.extent(1), 2 * h});
      for (std::size_t row = 0; row < rows; ++row) {
        std::copy(ys_f.data() + row * h, ys_f.data() + (row + 1) * h,
                  merged.data() + row * 2 * h);
        std::copy(ys_b.data() + row * h, ys_b.data() + (row + 1) * h,
                  merged.data() + row * 2 * h + h);
      }
      t = std::move(merged);
    }
    return t;
  }

  Tensor backward_batch(const BatchCache& cache, const Tensor& d_out) {
    Tensor d = d_out;
    for (std::size_t i = layers_.size(); i-- > 0;) {
      const std::size_t t_len = d.extent(0), n = d.extent(1), h = hidden_;
      Tensor d_f({t_len, n, h}), d_b({t_len, n, h});
      for (std::size_t row = 0; row < t_len * n; ++row) {
        std::copy(d.data() + row * 2 * h, d.data() + row * 2 * h + h,
                  d_f.data() + row * h);
        std::copy(d.data() + row * 2 * h + h, d.data() + (row + 1) * 2 * h,
                  d_b.data() + row * h);
      }
      Tensor d_xs = gru_batch_backward(cache.layers[i].fwd, layers_[i].fwd, d_f);
      d_xs += reverse_time(gru_batch_backward(cache.layers[i].bwd,
                                              layers_[i].bwd, reverse_time(d_b)));
      d = std::move(d_xs);
    }
    return d;
  }

  void visit_params(const ParamVisitor& f) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      layers_[i].fwd.visit_params("gru.l" + std::to_string(i) + ".fwd", f);
      layers_[i].bwd.visit_params("gru.l" + std::to_string(i) + ".bwd", f);
    }
  }

  std::vector<Layer>& layers() { return layers_; }

 private:
  std::vector<Layer> layers_;
  std::size_t hidden_ = 0;
};

}  // namespace omr

#endif  // OMR_GRU_HPP_
