// include/omr/model.hpp

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
// Full network: encoder -> 2-layer BiGRU -> shared per-frame linear ->
// log-softmax. The batch is padded to a common width; frames past each
// item's floor(W_i/4) are computed but flagged invalid and masked out of the
// loss by the caller.

#ifndef OMR_MODEL_HPP_
#define OMR_MODEL_HPP_

#include <string>
#include <vector>

#include <json.hpp>

#include "omr/augment.hpp"
#include "omr/ctc.hpp"
#include "omr/data.hpp"
#include "omr/encoder.hpp"
#include "omr/gru.hpp"
#include "omr/nn.hpp"
#include "omr/optim.hpp"
#include "omr/rng.hpp"
#include "omr/tensor.hpp"

namespace omr {

struct ModelConfig {
  EncoderConfig encoder;
  std::size_t gru_layers = 2;
  std::size_t gru_hidden = 256;
  std::size_t vocab_size = 0;  // output layer width is vocab_size + 1
  AdamConfig adam;
  CosineSchedule schedule;
  std::size_t batch_size = 16;
  long max_iterations = 64000;
  long eval_every = 500;
  bool augment = true;
  std::uint64_t seed = 1;

  std::size_t output_dim() const { return vocab_size + 1; }
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{
      {"encoder",
       {{"channels", c.encoder.channels},
        {"dilations", c.encoder.dilations},
        {"pools", c.encoder.pools},
        {"bottleneck_ratio", c.encoder.bottleneck_ratio},
        {"input_height", c.encoder.input_height},
        {"input_channels", c.encoder.input_channels},
        {"min_width", c.encoder.min_width}}},
      {"gru_layers", c.gru_layers},
      {"gru_hidden", c.gru_hidden},
      {"vocab_size", c.vocab_size},
      {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}},
      {"schedule",
       {{"lr0", c.schedule.lr0},
        {"lr_min", c.schedule.lr_min},
        {"t_max", c.schedule.t_max}}},
      {"batch_size", c.batch_size},
      {"max_iterations", c.max_iterations},
      {"eval_every", c.eval_every},
      {"augment", c.augment},
      {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  const auto& e = j.at("encoder");
  e.at("channels").get_to(c.encoder.channels);
  e.at("dilations").get_to(c.encoder.dilations);
  e.at("pools").get_to(c.encoder.pools);
  e.at("bottleneck_ratio").get_to(c.encoder.bottleneck_ratio);
  e.at("input_height").get_to(c.encoder.input_height);
  e.at("input_channels").get_to(c.encoder.input_channels);
  e.at("min_width").get_to(c.encoder.min_width);
  j.at("gru_layers").get_to(c.gru_layers);
  j.at("gru_hidden").get_to(c.gru_hidden);
  j.at("vocab_size").get_to(c.vocab_size);
  j.at("adam").at("beta1").get_to(c.adam.beta1);
  j.at("adam").at("beta2").get_to(c.adam.beta2);
  j.at("adam").at("eps").get_to(c.adam.eps);
  j.at("schedule").at("lr0").get_to(c.schedule.lr0);
  j.at("schedule").at("lr_min").get_to(c.schedule.lr_min);
  j.at("schedule").at("t_max").get_to(c.schedule.t_max);
  j.at("batch_size").get_to(c.batch_size);
  j.at("max_iterations").get_to(c.max_iterations);
  j.at("eval_every").get_to(c.eval_every);
  j.at("augment").get_to(c.augment);
  j.at("seed").get_to(c.seed);
}

enum class Mode { Train, Eval };

class Model {
 public:
  struct Forward {
    Tensor log_probs;                 // [N, T_max, V+1]
    std::vector<std::size_t> valid;   // per-item valid frame count
    // caches for backward
    Encoder::Cache enc;
    BiGruStack::BatchCache gru;
    Tensor enc_out;                      // [N, T, F]
    Tensor gru_out;                      // [N, T, 2H]
    Tensor logits;                       // [N, T, V+1]
    bool cached = false;
  };

  Model() = default;

  Model(ModelConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
    cfg_.encoder.validate();
    if (cfg_.vocab_size == 0) throw DimensionError("model: vocab size must be positive");
    encoder_ = Encoder(cfg_.encoder, rng);
    gru_ = BiGruStack(cfg_.encoder.feature_dim(), cfg_.gru_hidden, cfg_.gru_layers, rng);
    const std::size_t d_in = 2 * cfg_.gru_hidden, d_out = cfg_.output_dim();
    out_w_.init({d_in, d_out});
    out_b_.init({d_out});
    const Real bound = std::sqrt(1.0 / static_cast<Real>(d_in));
    for (auto& v : out_w_.v.vec()) v = rng.uniform(-bound, bound);
  }

  const ModelConfig& config() const { return cfg_; }
  Encoder& encoder() { return encoder_; }

  void visit_params(const ParamVisitor& f) {
    encoder_.visit_params(f);
    gru_.visit_params(f);
    f("out.w", out_w_);
    f("out.b", out_b_);
  }
  void visit_state(const StateVisitor& f) { encoder_.visit_state(f); }

  void zero_grads() {
    visit_params([](const std::string&, Param& p) { p.g.fill(0); });
  }

  // [N, T, F] <-> time-major [T, N, F]
  static Tensor to_time_major(const Tensor& t) {
    const std::size_t n = t.extent(0), t_len = t.extent(1), f = t.extent(2);
    Tensor out({t_len, n, f});
    for (std::size_t item = 0; item < n; ++item)
      for (std::size_t step = 0; step < t_len; ++step)
        std::copy(t.data() + (item * t_len + step) * f,
                  t.data() + (item * t_len + step + 1) * f,
                  out.data() + (step * n + item) * f);
    return out;
  }
  static Tensor to_batch_major(const Tensor& t) {
    const std::size_t t_len = t.extent(0), n = t.extent(1), f = t.extent(2);
    Tensor out({n, t_len, f});
    for (std::size_t step = 0; step < t_len; ++step)
      for (std::size_t item = 0; item < n; ++item)
        std::copy(t.data() + (step * n + item) * f,
                  t.data() + (step * n + item + 1) * f,
                  out.data() + (item * t_len + step) * f);
    return out;
  }

  // batch.images: [N, 1, 128, W_max] -> log_probs [N, T_max, V+1]
  Forward forward(const Batch& batch, Mode mode) {
    Forward fw;
    const bool training = mode == Mode::Train;
    fw.enc_out = encoder_.forward(batch.images, training, training ? &fw.enc : nullptr);
    const std::size_t n = fw.enc_out.extent(0);
    Tensor ys = gru_.forward_batch(to_time_major(fw.enc_out),
                                   training ? &fw.gru : nullptr);
    fw.gru_out = to_batch_major(ys);
    fw.logits = linear_forward(fw.gru_out, out_w_.v, out_b_.v);
    fw.log_probs = log_softmax(fw.logits);
    for (std::size_t item = 0; item < batch.size(); ++item)
      fw.valid.push_back(cfg_.encoder.out_time(batch.widths[item]));
    fw.cached = training;
    (void)n;
    return fw;
  }

  // d_logits: [N, T_max, V+1] (zero beyond each item's valid frames).
  // Accumulates parameter gradients.
  void backward(Forward& fw, const Tensor& d_logits) {
    if (!fw.cached) throw DimensionError("model: backward without a train-mode forward");
    LinearGrads lg = linear_backward(fw.gru_out, out_w_.v, d_logits);
    out_w_.g += lg.d_w;
    out_b_.g += lg.d_b;
    Tensor d_ys = gru_.backward_batch(fw.gru, to_time_major(lg.d_x));
    encoder_.backward(fw.enc, to_batch_major(d_ys));
  }

  // Single-image convenience path used by prediction and evaluation.
  std::vector<int> predict_ids(const Tensor& image) {
    Sample s;
    s.id = "probe";
    s.image = image;
    Batch b = make_batch(std::span<const Sample>(&s, 1), 1);
    Forward fw = forward(b, Mode::Eval);
    const std::size_t t = fw.valid[0], v1 = cfg_.output_dim();
    Tensor item({t, v1});
    std::copy(fw.log_probs.data(), fw.log_probs.data() + t * v1, item.data());
    return ctc_greedy_decode(item, static_cast<int>(cfg_.vocab_size));
  }

 private:
  ModelConfig cfg_;
  Encoder encoder_;
  BiGruStack gru_;
  Param out_w_, out_b_;
};

}  // namespace omr

#endif  // OMR_MODEL_HPP_
