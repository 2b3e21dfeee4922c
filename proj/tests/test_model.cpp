// tests/test_model.cpp

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

#include <catch2/catch.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "omr/checkpoint.hpp"
#include "omr/model.hpp"
#include "omr/synth.hpp"
#include "omr/trainer.hpp"

using namespace omr;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("omr_model_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

ModelConfig micro_config(std::size_t vocab) {
  ModelConfig cfg;
  cfg.encoder.channels = {4, 8, 8, 8, 8};
  cfg.encoder.bottleneck_ratio = 4;
  cfg.gru_hidden = 16;
  cfg.gru_layers = 2;
  cfg.vocab_size = vocab;
  cfg.batch_size = 4;
  return cfg;
}

// Slightly wider net for the overfit smokes; the tiny one converges too
// slowly to clear the 200-step bar.
ModelConfig overfit_config(std::size_t vocab) {
  ModelConfig cfg = micro_config(vocab);
  cfg.encoder.channels = {8, 16, 16, 16, 16};
  cfg.gru_hidden = 24;
  return cfg;
}

// In-memory synthetic samples; targets avoid adjacent repeats (the slowest
// CTC case) so the smoke tests converge quickly.
std::vector<Sample> synth_samples(std::size_t count, std::uint64_t seed,
                                  int vocab, std::size_t min_len,
                                  std::size_t max_len, bool allow_repeats = false) {
  Rng rng(seed);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<int> ids;
    const auto len = static_cast<std::size_t>(rng.uniform_int(
        static_cast<long>(min_len), static_cast<long>(max_len)));
    for (std::size_t j = 0; j < len; ++j) {
      int id;
      do {
        id = static_cast<int>(rng.uniform_int(0, vocab - 1));
      } while (!allow_repeats && !ids.empty() && id == ids.back());
      ids.push_back(id);
    }
    Sample s;
    s.id = "s" + std::to_string(i);
    s.image = tensor_from_image(synth_render(ids, rng, 12));
    s.target = ids;
    out.push_back(std::move(s));
  }
  return out;
}

Adam bind_adam(Model& model, AdamConfig cfg = {}) {
  Adam adam(cfg);
  model.visit_params([&](const std::string& n, Param& p) { adam.bind(n, p); });
  return adam;
}

Real batch_ctc_loss(Model& model, const Batch& batch, Mode mode) {
  Model::Forward fw = model.forward(batch, mode);
  const std::size_t t_max = fw.log_probs.extent(1), v1 = fw.log_probs.extent(2);
  Real sum = 0;
  for (std::size_t item = 0; item < batch.size(); ++item) {
    const std::size_t t_i = fw.valid[item];
    Tensor lp({t_i, v1});
    std::copy(fw.log_probs.data() + item * t_max * v1,
              fw.log_probs.data() + item * t_max * v1 + t_i * v1, lp.data());
    sum += ctc_loss(lp,
                    std::span<const int>(batch.targets[item].data(),
                                         batch.targets[item].size()),
                    static_cast<int>(v1) - 1)
               .loss;
  }
  return sum / static_cast<Real>(batch.size());
}

}  // namespace

TEST_CASE("model output shape is (N, floor(W/4), V+1)", "[model]") {
  ModelConfig cfg;  // paper-shaped encoder
  cfg.vocab_size = 10;
  Rng rng(1);
  Model model(cfg, rng);
  Sample s{"probe", Tensor::full({1, 128, 256}, 1.0), {0}};
  Batch batch = make_batch(std::span<const Sample>(&s, 1), 1);
  Model::Forward fw = model.forward(batch, Mode::Eval);
  REQUIRE(fw.log_probs.shape() == Shape{1, 64, 11});
  REQUIRE(fw.valid == std::vector<std::size_t>{64});

  // every frame is a log-distribution
  for (std::size_t t = 0; t < 64; ++t) {
    Real sum = 0;
    for (std::size_t k = 0; k < 11; ++k) sum += std::exp(fw.log_probs(0, t, k));
    REQUIRE(sum == Approx(1.0).margin(1e-6));
  }
}

TEST_CASE("eval mode is deterministic", "[model]") {
  Rng rng(3);
  Model model(micro_config(6), rng);
  auto samples = synth_samples(2, 17, 6, 2, 4);
  Batch batch = make_batch(samples, 2);
  Model::Forward a = model.forward(batch, Mode::Eval);
  Model::Forward b = model.forward(batch, Mode::Eval);
  for (std::size_t i = 0; i < a.log_probs.numel(); ++i)
    REQUIRE(a.log_probs[i] == b.log_probs[i]);
}

TEST_CASE("zero learning rate leaves parameters unchanged", "[model]") {
  ModelConfig cfg = micro_config(6);
  cfg.schedule = {0.0, 0.0, 100};
  Rng rng(5);
  Model model(cfg, rng);
  Adam adam = bind_adam(model);
  auto samples = synth_samples(4, 23, 6, 2, 4);
  Batch batch = make_batch(samples, 4);

  std::vector<Real> before;
  model.visit_params([&](const std::string&, Param& p) {
    before.insert(before.end(), p.v.vec().begin(), p.v.vec().end());
  });
  train_step(model, adam, batch, 0, cfg.schedule);
  std::vector<Real> after;
  model.visit_params([&](const std::string&, Param& p) {
    after.insert(after.end(), p.v.vec().begin(), p.v.vec().end());
  });
  REQUIRE(before == after);
}

TEST_CASE("iteration-1 loss sits near the uniform-distribution oracle", "[model]") {
  ModelConfig cfg = micro_config(8);
  Rng rng(7);
  Model model(cfg, rng);
  auto samples = synth_samples(4, 29, 8, 3, 5);
  Batch batch = make_batch(samples, 4);
  const Real fresh = batch_ctc_loss(model, batch, Mode::Train);

  // oracle: the same targets scored under exactly uniform rows
  Real uniform_sum = 0;
  for (const auto& s : samples) {
    const std::size_t t_i = s.image.extent(2) / 4;
    Tensor lp = Tensor::full({t_i, 9}, std::log(1.0 / 9.0));
    uniform_sum +=
        ctc_loss(lp, std::span<const int>(s.target.data(), s.target.size()), 8).loss;
  }
  const Real uniform = uniform_sum / 4.0;
  REQUIRE(fresh > 0.25 * uniform);
  REQUIRE(fresh < 2.0 * uniform);
}

TEST_CASE("200 steps overfit a fixed 4-sample batch below 0.1", "[model]") {
  ModelConfig cfg = overfit_config(4);
  cfg.schedule = {2e-2, 2e-4, 200};
  Rng rng(99);
  Model model(cfg, rng);
  Adam adam = bind_adam(model);
  auto samples = synth_samples(4, 7, 4, 2, 3);
  Batch batch = make_batch(samples, 4);
  for (long it = 0; it < 200; ++it) train_step(model, adam, batch, it, cfg.schedule);
  const Real loss = batch_ctc_loss(model, batch, Mode::Train);
  REQUIRE(loss < 0.1);
}

TEST_CASE("overfit loss keeps reaching new lows after iteration 100", "[model]") {
  ModelConfig cfg = overfit_config(4);
  cfg.schedule = {2e-2, 2e-4, 300};
  Rng rng(99);
  Model model(cfg, rng);
  Adam adam = bind_adam(model);
  auto samples = synth_samples(4, 7, 4, 2, 3);
  Batch batch = make_batch(samples, 4);
  std::vector<Real> losses;
  for (long it = 0; it < 300; ++it)
    losses.push_back(train_step(model, adam, batch, it, cfg.schedule).loss);
  // rolling 50-iteration minimum is non-increasing past the warmup
  auto window_min = [&](std::size_t start) {
    Real m = losses[start];
    for (std::size_t i = start; i < start + 50; ++i) m = std::min(m, losses[i]);
    return m;
  };
  for (std::size_t start = 100; start + 51 < losses.size(); ++start)
    REQUIRE(window_min(start + 1) <= window_min(start) + 1e-9);
}

TEST_CASE("training trajectory is reproducible for a fixed seed", "[model]") {
  auto run = [] {
    ModelConfig cfg = micro_config(6);
    cfg.schedule = {5e-3, 5e-5, 50};
    Rng rng(31);
    Model model(cfg, rng);
    Adam adam = bind_adam(model);
    auto train_set = synth_samples(12, 41, 6, 2, 4);
    Vocabulary vocab = Vocabulary::build(
        {synth_token_names(6, Encoding::Semantic)}, Encoding::Semantic);
    TrainOptions opt;
    opt.iterations = 50;
    opt.eval_every = 0;
    opt.augment = true;  // exercises the augmentation path determinism too
    opt.seed = 31;
    opt.batch_size = 4;
    return train(model, adam, train_set, {}, vocab, opt).losses;
  };
  const auto a = run();
  const auto b = run();
  REQUIRE(a.size() == 50);
  for (std::size_t i = 0; i < a.size(); ++i)
    REQUIRE(std::memcmp(&a[i], &b[i], sizeof(Real)) == 0);
}

TEST_CASE("infeasible targets contribute the sentinel loss and are counted",
          "[model]") {
  ModelConfig cfg = micro_config(4);
  Rng rng(11);
  Model model(cfg, rng);
  Adam adam = bind_adam(model);
  Sample bad;
  bad.id = "bad";
  bad.image = Tensor::full({1, 128, 16}, 1.0);  // T = 4 frames
  bad.target = {0, 1, 0, 1, 0, 1};              // needs 6
  Batch batch = make_batch(std::span<const Sample>(&bad, 1), 1);
  TrainStepResult r = train_step(model, adam, batch, 0, cfg.schedule);
  REQUIRE(r.infeasible_items == 1);
  REQUIRE(r.loss == Approx(1e4));
}

TEST_CASE("untrained model scores near-total sequence error", "[model]") {
  ModelConfig cfg = micro_config(8);
  Rng rng(13);
  Model model(cfg, rng);
  auto samples = synth_samples(20, 43, 8, 3, 6);
  Vocabulary vocab = Vocabulary::build({synth_token_names(8, Encoding::Semantic)},
                                       Encoding::Semantic);
  EvalResult res = evaluate(model, samples, vocab);
  REQUIRE(res.samples == 20);
  REQUIRE(res.seq.seer_pct >= 90.0);
  // deterministic given parameters and corpus
  EvalResult res2 = evaluate(model, samples, vocab);
  REQUIRE(res2.seq.seer_pct == res.seq.seer_pct);
  REQUIRE(res2.seq.syer_pct == res.seq.syer_pct);
}

TEST_CASE("evaluate rejects an empty split", "[model]") {
  ModelConfig cfg = micro_config(4);
  Rng rng(17);
  Model model(cfg, rng);
  Vocabulary vocab = Vocabulary::build({synth_token_names(4, Encoding::Semantic)},
                                       Encoding::Semantic);
  REQUIRE_THROWS_AS(evaluate(model, {}, vocab), DataError);
}

TEST_CASE("config serialization round-trips losslessly", "[model]") {
  ModelConfig cfg = micro_config(12);
  cfg.schedule = {3e-4, 7e-6, 12345};
  cfg.augment = false;
  cfg.seed = 0xdeadbeef;
  nlohmann::json j = cfg;
  ModelConfig back = j.get<ModelConfig>();
  nlohmann::json j2 = back;
  REQUIRE(j.dump() == j2.dump());
  REQUIRE(back.encoder.channels == cfg.encoder.channels);
  REQUIRE(back.schedule.t_max == cfg.schedule.t_max);
  REQUIRE(back.seed == cfg.seed);
}

TEST_CASE("end-to-end micro-model gradient check", "[model]") {
  ModelConfig cfg;
  cfg.encoder.channels = {2, 2, 2, 2, 2};
  cfg.encoder.bottleneck_ratio = 4;
  cfg.gru_hidden = 2;
  cfg.gru_layers = 2;
  cfg.vocab_size = 3;
  Rng rng(11);
  Model model(cfg, rng);
  auto samples = synth_samples(2, 5, 3, 2, 2);
  for (auto& s : samples) {  // crop to W = 32
    Tensor x = Tensor::full({1, 128, 32}, 1.0);
    for (std::size_t y = 0; y < 128; ++y)
      for (std::size_t c = 0; c < std::min<std::size_t>(32, s.image.extent(2)); ++c)
        x(0, y, c) = s.image(0, y, c);
    s.image = x;
  }
  Batch batch = make_batch(samples, 2);

  auto loss_fn = [&] { return batch_ctc_loss(model, batch, Mode::Train); };

  Model::Forward fw = model.forward(batch, Mode::Train);
  const std::size_t t_max = fw.log_probs.extent(1), v1 = fw.log_probs.extent(2);
  Tensor d_logits({batch.size(), t_max, v1});
  for (std::size_t item = 0; item < batch.size(); ++item) {
    const std::size_t t_i = fw.valid[item];
    Tensor lp({t_i, v1});
    std::copy(fw.log_probs.data() + item * t_max * v1,
              fw.log_probs.data() + item * t_max * v1 + t_i * v1, lp.data());
    CtcResult r = ctc_loss(lp,
                           std::span<const int>(batch.targets[item].data(),
                                                batch.targets[item].size()),
                           static_cast<int>(v1) - 1);
    for (std::size_t p = 0; p < t_i * v1; ++p)
      d_logits[item * t_max * v1 + p] = r.d_logits[p] / static_cast<Real>(batch.size());
  }
  model.zero_grads();
  model.backward(fw, d_logits);

  const Real h = 1e-5;
  Real worst = 0;
  model.visit_params([&](const std::string& name, Param& p) {
    for (std::size_t i = 0; i < p.v.numel(); ++i) {
      const Real saved = p.v[i];
      p.v[i] = saved + h;
      const Real up = loss_fn();
      p.v[i] = saved - h;
      const Real dn = loss_fn();
      p.v[i] = saved;
      const Real fd = (up - dn) / (2 * h);
      const Real err = std::abs(fd - p.g[i]) /
                       std::max({Real(1), std::abs(fd), std::abs(p.g[i])});
      INFO(name << "[" << i << "]");
      worst = std::max(worst, err);
    }
  });
  REQUIRE(worst < 1e-4);  // acceptance re-checks this at 1e-6
}

TEST_CASE("checkpoint persists and round-trips bit-exactly", "[checkpoint]") {
  TempDir dir("ckpt");
  ModelConfig cfg = micro_config(5);
  Rng rng(19);
  Model model(cfg, rng);
  Adam adam = bind_adam(model);
  auto samples = synth_samples(4, 47, 5, 2, 3);
  Batch batch = make_batch(samples, 4);
  for (long it = 0; it < 3; ++it) train_step(model, adam, batch, it, cfg.schedule);

  const fs::path p1 = dir.path / "a.ckpt";
  save_checkpoint(p1, model, 3, &adam);

  // load into a freshly (differently) initialized model
  Rng rng2(777);
  Model loaded(cfg, rng2);
  Adam adam2 = bind_adam(loaded);
  apply_checkpoint(load_checkpoint(p1), loaded, &adam2);
  REQUIRE(adam2.step_count() == adam.step_count());

  // persisted form is a fixed point: file -> model -> file is byte-identical
  const fs::path p2 = dir.path / "b.ckpt";
  save_checkpoint(p2, loaded, 3, &adam2);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), {});
  std::string s2((std::istreambuf_iterator<char>(f2)), {});
  REQUIRE(s1 == s2);

  // forward outputs of loaded models are bit-identical on a fixed probe
  Model loaded2(cfg, rng2);
  apply_checkpoint(load_checkpoint(p2), loaded2);
  Model::Forward fa = loaded.forward(batch, Mode::Eval);
  Model::Forward fb = loaded2.forward(batch, Mode::Eval);
  for (std::size_t i = 0; i < fa.log_probs.numel(); ++i)
    REQUIRE(std::memcmp(&fa.log_probs[i], &fb.log_probs[i], sizeof(Real)) == 0);
}

TEST_CASE("checkpoint refuses corruption and mismatches", "[checkpoint]") {
  TempDir dir("ckpt_bad");
  ModelConfig cfg = micro_config(5);
  Rng rng(23);
  Model model(cfg, rng);
  const fs::path good = dir.path / "good.ckpt";
  save_checkpoint(good, model, 0);

  // corrupted magic: explicit refusal, not a crash
  {
    std::fstream f(good, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(0);
    f.write("XXXX", 4);
  }
  REQUIRE_THROWS_AS(load_checkpoint(good), CheckpointError);

  // truncated payload
  save_checkpoint(good, model, 0);
  const auto full_size = fs::file_size(good);
  fs::resize_file(good, full_size - 64);
  REQUIRE_THROWS_AS(load_checkpoint(good), CheckpointError);

  // checkpoint from config A refused by a model built from config B
  save_checkpoint(good, model, 0);
  ModelConfig other = micro_config(5);
  other.gru_hidden = 24;  // different shapes
  Rng rng2(29);
  Model wrong(other, rng2);
  Checkpoint ckpt = load_checkpoint(good);
  REQUIRE_THROWS_AS(apply_checkpoint(ckpt, wrong), CheckpointError);

  REQUIRE_THROWS_AS(load_checkpoint(dir.path / "missing.ckpt"), CheckpointError);
}

TEST_CASE("best checkpoint is retained by validation error", "[checkpoint]") {
  TempDir dir("train_ckpt");
  ModelConfig cfg = micro_config(4);
  cfg.schedule = {2e-2, 2e-4, 120};
  Rng rng(99);
  Model model(cfg, rng);
  Adam adam = bind_adam(model);
  auto train_set = synth_samples(8, 53, 4, 2, 3);
  auto val_set = synth_samples(4, 59, 4, 2, 3);
  Vocabulary vocab = Vocabulary::build({synth_token_names(4, Encoding::Semantic)},
                                       Encoding::Semantic);
  TrainOptions opt;
  opt.iterations = 120;
  opt.eval_every = 40;
  opt.augment = false;
  opt.seed = 3;
  opt.batch_size = 4;
  opt.checkpoint_dir = dir.path;
  TrainResult result = train(model, adam, train_set, val_set, vocab, opt);
  REQUIRE(fs::exists(dir.path / "best.ckpt"));
  REQUIRE(fs::exists(dir.path / "last.ckpt"));
  REQUIRE(result.best_val_syer >= 0.0);
  REQUIRE_FALSE(result.eval_points.empty());
  // the recorded best is the minimum over the evaluation points
  double min_syer = 1e9;
  for (const auto& ep : result.eval_points) min_syer = std::min(min_syer, ep.val_syer);
  REQUIRE(result.best_val_syer == Approx(min_syer));
}
