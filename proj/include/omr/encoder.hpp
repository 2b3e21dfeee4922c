// include/omr/encoder.hpp

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
// Pre-activation bottleneck residual encoder. Each block runs
//   norm -> relu -> 1x1 reduce -> norm -> relu -> 3x3 dilated -> norm -> relu
//   -> 1x1 restore, plus a shortcut (identity, or a 1x1 projection when the
// channel count changes), and is followed by its pooling window. The final
// feature map is collapsed so width becomes the time axis and
// channels x height becomes the feature axis (feature index = c*H + h).

#ifndef OMR_ENCODER_HPP_
#define OMR_ENCODER_HPP_

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "omr/nn.hpp"
#include "omr/rng.hpp"
#include "omr/tensor.hpp"

namespace omr {

// A trainable tensor together with its gradient accumulator.
struct Param {
  Tensor v;
  Tensor g;

  void init(Shape shape) {
    v = Tensor(shape);
    g = Tensor(shape);
  }
  void init_full(Shape shape, Real value) {
    v = Tensor::full(shape, value);
    g = Tensor(std::move(shape));
  }
};

using ParamVisitor = std::function<void(const std::string&, Param&)>;
using StateVisitor = std::function<void(const std::string&, Tensor&)>;

inline void init_conv_weight(Param& w, Param& b, const Conv2dSpec& spec,
                             Rng& rng) {
  w.init({spec.out_channels, spec.in_channels, spec.kernel_h, spec.kernel_w});
  b.init({spec.out_channels});
  const Real fan_in =
      static_cast<Real>(spec.in_channels * spec.kernel_h * spec.kernel_w);
  const Real std = std::sqrt(2.0 / fan_in);
  for (auto& v : w.v.vec()) v = rng.gaussian(0.0, std);
}

struct EncoderConfig {
  std::vector<std::size_t> channels{32, 64, 128, 256, 256};
  std::vector<std::pair<std::size_t, std::size_t>> dilations{
      {1, 1}, {2, 1}, {4, 1}, {8, 1}, {1, 1}};  // (height, width)
  std::vector<std::pair<std::size_t, std::size_t>> pools{
      {2, 2}, {2, 2}, {2, 1}, {2, 1}, {1, 1}};  // (height, width)
  std::size_t bottleneck_ratio = 4;
  std::size_t input_height = 128;
  std::size_t input_channels = 1;
  std::size_t min_width = 16;

  std::size_t num_blocks() const { return channels.size(); }
  std::size_t height_divisor() const {
    std::size_t d = 1;
    for (const auto& p : pools) d *= p.first;
    return d;
  }
  std::size_t width_divisor() const {
    std::size_t d = 1;
    for (const auto& p : pools) d *= p.second;
    return d;
  }
  std::size_t final_height() const { return input_height / height_divisor(); }
  std::size_t feature_dim() const { return channels.back() * final_height(); }
  // Successive floor division per pooling stage; equals floor(W / width
  // divisor) because floor(floor(w/a)/b) == floor(w/(a*b)).
  std::size_t out_time(std::size_t width) const {
    std::size_t t = width;
    for (const auto& p : pools) t /= p.second;
    return t;
  }

  void validate() const {
    if (channels.empty() || dilations.size() != channels.size() ||
        pools.size() != channels.size())
      throw DimensionError("encoder config: channel/dilation/pool lists must align");
    if (input_height % height_divisor() != 0)
      throw DimensionError("encoder config: input height not divisible by pooling");
    for (const auto& d : dilations)
      if (d.first < 1 || d.second < 1)
        throw DimensionError("encoder config: dilation must be >= 1");
  }
};

struct BottleneckBlock {
  Conv2dSpec reduce_spec, spatial_spec, restore_spec, shortcut_spec;
  bool has_shortcut = false;

  Param bn1_gamma, bn1_beta, bn2_gamma, bn2_beta, bn3_gamma, bn3_beta;
  Tensor bn1_rmean, bn1_rvar, bn2_rmean, bn2_rvar, bn3_rmean, bn3_rvar;
  Param reduce_w, reduce_b, spatial_w, spatial_b, restore_w, restore_b;
  Param shortcut_w, shortcut_b;

  struct Cache {
    Tensor x;
    BatchNormCache bn1, bn2, bn3;
    Tensor a1, a2, a3;  // post-relu activations (relu mask == value > 0)
  };

  void init(std::size_t in_c, std::size_t out_c, std::size_t ratio,
            std::pair<std::size_t, std::size_t> dilation, Rng& rng) {
    const std::size_t mid = std::max<std::size_t>(1, out_c / ratio);
    reduce_spec = {in_c, mid, 1, 1, 1, 1};
    spatial_spec = {mid, mid, 3, 3, dilation.first, dilation.second};
    restore_spec = {mid, out_c, 1, 1, 1, 1};
    has_shortcut = in_c != out_c;

    auto init_bn = [](Param& g, Param& b, Tensor& rm, Tensor& rv, std::size_t c) {
      g.init_full({c}, 1.0);
      b.init({c});
      rm = Tensor({c});
      rv = Tensor::full({c}, 1.0);
    };
    init_bn(bn1_gamma, bn1_beta, bn1_rmean, bn1_rvar, in_c);
    init_bn(bn2_gamma, bn2_beta, bn2_rmean, bn2_rvar, mid);
    init_bn(bn3_gamma, bn3_beta, bn3_rmean, bn3_rvar, mid);
    init_conv_weight(reduce_w, reduce_b, reduce_spec, rng);
    init_conv_weight(spatial_w, spatial_b, spatial_spec, rng);
    init_conv_weight(restore_w, restore_b, restore_spec, rng);
    if (has_shortcut) {
      shortcut_spec = {in_c, out_c, 1, 1, 1, 1};
      init_conv_weight(shortcut_w, shortcut_b, shortcut_spec, rng);
    }
  }

  Tensor shortcut(const Tensor& x) const {
    return has_shortcut
               ? conv2d_forward(x, shortcut_spec, shortcut_w.v, shortcut_b.v)
               : x;
  }

  Tensor forward(const Tensor& x, bool training, Cache* cache) {
    Cache local;
    Cache& c = cache ? *cache : local;
    c.x = x;
    Tensor t = batchnorm2d_forward(x, bn1_gamma.v, bn1_beta.v, bn1_rmean,
                                   bn1_rvar, training, cache ? &c.bn1 : nullptr);
    c.a1 = relu_forward(t);
    t = conv2d_forward(c.a1, reduce_spec, reduce_w.v, reduce_b.v);
    t = batchnorm2d_forward(t, bn2_gamma.v, bn2_beta.v, bn2_rmean, bn2_rvar,
                            training, cache ? &c.bn2 : nullptr);
    c.a2 = relu_forward(t);
    t = conv2d_forward(c.a2, spatial_spec, spatial_w.v, spatial_b.v);
    t = batchnorm2d_forward(t, bn3_gamma.v, bn3_beta.v, bn3_rmean, bn3_rvar,
                            training, cache ? &c.bn3 : nullptr);
    c.a3 = relu_forward(t);
    Tensor out = conv2d_forward(c.a3, restore_spec, restore_w.v, restore_b.v);
    out += shortcut(x);
    return out;
  }

  // Accumulates parameter gradients, returns d_x.
  Tensor backward(const Cache& c, const Tensor& d_out) {
    Conv2dGrads gr = conv2d_backward(c.a3, restore_spec, restore_w.v, d_out);
    restore_w.g += gr.d_w;
    restore_b.g += gr.d_b;
    Tensor d = relu_backward(c.a3, gr.d_x);
    BatchNormGrads gb = batchnorm2d_backward(c.bn3, bn3_gamma.v, d);
    bn3_gamma.g += gb.d_gamma;
    bn3_beta.g += gb.d_beta;

    gr = conv2d_backward(c.a2, spatial_spec, spatial_w.v, gb.d_x);
    spatial_w.g += gr.d_w;
    spatial_b.g += gr.d_b;
    d = relu_backward(c.a2, gr.d_x);
    gb = batchnorm2d_backward(c.bn2, bn2_gamma.v, d);
    bn2_gamma.g += gb.d_gamma;
    bn2_beta.g += gb.d_beta;

    gr = conv2d_backward(c.a1, reduce_spec, reduce_w.v, gb.d_x);
    reduce_w.g += gr.d_w;
    reduce_b.g += gr.d_b;
    d = relu_backward(c.a1, gr.d_x);
    gb = batchnorm2d_backward(c.bn1, bn1_gamma.v, d);
    bn1_gamma.g += gb.d_gamma;
    bn1_beta.g += gb.d_beta;
    Tensor d_x = std::move(gb.d_x);

    if (has_shortcut) {
      Conv2dGrads gs = conv2d_backward(c.x, shortcut_spec, shortcut_w.v, d_out);
      shortcut_w.g += gs.d_w;
      shortcut_b.g += gs.d_b;
      d_x += gs.d_x;
    } else {
      d_x += d_out;
    }
    return d_x;
  }

  void visit_params(const std::string& prefix, const ParamVisitor& f) {
    f(prefix + ".bn1.gamma", bn1_gamma);
    f(prefix + ".bn1.beta", bn1_beta);
    f(prefix + ".reduce.w", reduce_w);
    f(prefix + ".reduce.b", reduce_b);
    f(prefix + ".bn2.gamma", bn2_gamma);
    f(prefix + ".bn2.beta", bn2_beta);
    f(prefix + ".spatial.w", spatial_w);
    f(prefix + ".spatial.b", spatial_b);
    f(prefix + ".bn3.gamma", bn3_gamma);
    f(prefix + ".bn3.beta", bn3_beta);
    f(prefix + ".restore.w", restore_w);
    f(prefix + ".restore.b", restore_b);
    if (has_shortcut) {
      f(prefix + ".shortcut.w", shortcut_w);
      f(prefix + ".shortcut.b", shortcut_b);
    }
  }

  void visit_state(const std::string& prefix, const StateVisitor& f) {
    f(prefix + ".bn1.rmean", bn1_rmean);
    f(prefix + ".bn1.rvar", bn1_rvar);
    f(prefix + ".bn2.rmean", bn2_rmean);
    f(prefix + ".bn2.rvar", bn2_rvar);
    f(prefix + ".bn3.rmean", bn3_rmean);
    f(prefix + ".bn3.rvar", bn3_rvar);
  }
};

class Encoder {
 public:
  struct Cache {
    std::vector<BottleneckBlock::Cache> blocks;
    std::vector<MaxPoolCache> pools;
    Shape map_shape;  // [N, C, H_final, T] before the collapse
  };

  Encoder() = default;
  Encoder(EncoderConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
    cfg_.validate();
    blocks_.resize(cfg_.num_blocks());
    std::size_t in_c = cfg_.input_channels;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      blocks_[i].init(in_c, cfg_.channels[i], cfg_.bottleneck_ratio,
                      cfg_.dilations[i], rng);
      in_c = cfg_.channels[i];
    }
  }

  const EncoderConfig& config() const { return cfg_; }
  std::vector<BottleneckBlock>& blocks() { return blocks_; }

  // x: [N, C_in, H, W]  ->  [N, T, feature_dim] with T = out_time(W)
  Tensor forward(const Tensor& x, bool training, Cache* cache) {
    if (x.rank() != 4 || x.extent(1) != cfg_.input_channels ||
        x.extent(2) != cfg_.input_height)
      throw DimensionError("encoder: input must be [N," +
                           std::to_string(cfg_.input_channels) + "," +
                           std::to_string(cfg_.input_height) + ",W]");
    if (x.extent(3) < cfg_.min_width)
      throw DimensionError("encoder: width " + std::to_string(x.extent(3)) +
                           " below minimum " + std::to_string(cfg_.min_width));
    if (cache) {
      cache->blocks.resize(blocks_.size());
      cache->pools.resize(blocks_.size());
    }
    Tensor t = x;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      t = blocks_[i].forward(t, training, cache ? &cache->blocks[i] : nullptr);
      MaxPoolCache local;
      t = maxpool2d_forward(t, cfg_.pools[i].first, cfg_.pools[i].second,
                            cache ? &cache->pools[i] : &local);
    }
    if (cache) cache->map_shape = t.shape();
    return collapse(t);
  }

  // d_out: [N, T, feature_dim]  ->  d_x
  Tensor backward(const Cache& cache, const Tensor& d_out) {
    Tensor d = uncollapse(d_out, cache.map_shape);
    for (std::size_t i = blocks_.size(); i-- > 0;) {
      d = maxpool2d_backward(cache.pools[i], d);
      d = blocks_[i].backward(cache.blocks[i], d);
    }
    return d;
  }

  void visit_params(const ParamVisitor& f) {
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      blocks_[i].visit_params("enc.b" + std::to_string(i), f);
  }
  void visit_state(const StateVisitor& f) {
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      blocks_[i].visit_state("enc.b" + std::to_string(i), f);
  }

  // [N, C, H, T] -> [N, T, C*H]; feature index = c*H + h.
  static Tensor collapse(const Tensor& map) {
    const std::size_t n = map.extent(0), c = map.extent(1), h = map.extent(2),
                      t = map.extent(3);
    Tensor out({n, t, c * h});
    for (std::size_t item = 0; item < n; ++item)
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t row = 0; row < h; ++row) {
          const Real* src = map.data() + ((item * c + ch) * h + row) * t;
          const std::size_t feat = ch * h + row;
          Real* dst = out.data() + (item * t) * (c * h) + feat;
          for (std::size_t col = 0; col < t; ++col) dst[col * c * h] = src[col];
        }
    return out;
  }

  static Tensor uncollapse(const Tensor& seq, const Shape& map_shape) {
    const std::size_t n = map_shape[0], c = map_shape[1], h = map_shape[2],
                      t = map_shape[3];
    Tensor out(map_shape);
    for (std::size_t item = 0; item < n; ++item)
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t row = 0; row < h; ++row) {
          Real* dst = out.data() + ((item * c + ch) * h + row) * t;
          const std::size_t feat = ch * h + row;
          const Real* src = seq.data() + (item * t) * (c * h) + feat;
          for (std::size_t col = 0; col < t; ++col) dst[col] = src[col * c * h];
        }
    return out;
  }

 private:
  EncoderConfig cfg_;
  std::vector<BottleneckBlock> blocks_;
};

}  // namespace omr

#endif  // OMR_ENCODER_HPP_
