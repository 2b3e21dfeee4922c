// include/omr/trainer.hpp

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
// Training loop and evaluation. Loss is the mean per-item CTC loss over each
// item's valid frames; a CTC-infeasible item contributes a large finite loss
// (1e4) and no gradient instead of aborting the batch, and is counted.

#ifndef OMR_TRAINER_HPP_
#define OMR_TRAINER_HPP_

#include <chrono>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "omr/augment.hpp"
#include "omr/checkpoint.hpp"
#include "omr/ctc.hpp"
#include "omr/data.hpp"
#include "omr/metrics.hpp"
#include "omr/model.hpp"
#include "omr/optim.hpp"

namespace omr {

constexpr Real kInfeasibleLoss = 1e4;

struct TrainStepResult {
  Real loss = 0;
  std::size_t infeasible_items = 0;
};

inline TrainStepResult train_step(Model& model, Adam& adam, const Batch& batch,
                                  long iteration, const CosineSchedule& schedule) {
  Model::Forward fw = model.forward(batch, Mode::Train);
  const std::size_t n = batch.size();
  const std::size_t t_max = fw.log_probs.extent(1);
  const std::size_t v1 = fw.log_probs.extent(2);
  const int blank = static_cast<int>(v1) - 1;

  Tensor d_logits({n, t_max, v1});
  TrainStepResult result;
  Real loss_sum = 0;
  const Real item_scale = 1.0 / static_cast<Real>(n);
  for (std::size_t item = 0; item < n; ++item) {
    const std::size_t t_i = fw.valid[item];
    Tensor lp({t_i, v1});
    std::copy(fw.log_probs.data() + item * t_max * v1,
              fw.log_probs.data() + item * t_max * v1 + t_i * v1, lp.data());
    const auto& target = batch.targets[item];
    try {
      CtcResult ctc = ctc_loss(lp, std::span<const int>(target.data(), target.size()),
                               blank);
      loss_sum += ctc.loss;
      for (std::size_t p = 0; p < t_i * v1; ++p)
        d_logits[item * t_max * v1 + p] = item_scale * ctc.d_logits[p];
    } catch (const CtcInfeasibleError&) {
      loss_sum += kInfeasibleLoss;  // zero gradient for this item
      ++result.infeasible_items;
    }
  }
  result.loss = loss_sum * item_scale;
  if (!std::isfinite(result.loss)) {
    std::string ids;
    for (const auto& id : batch.ids) ids += " " + id;
    throw NumericError("non-finite loss at iteration " + std::to_string(iteration) +
                       "; batch ids:" + ids);
  }
  model.zero_grads();
  model.backward(fw, d_logits);
  adam.step(cosine_lr(iteration, schedule));
  return result;
}

// ---------------------------------------------------------------------------
// Evaluation: greedy-decode every sample, detokenize, run the full metric set.
// ---------------------------------------------------------------------------

struct EvalResult {
  SequenceMetrics seq;
  NoteAccuracies notes;
  OmrNedReport ned;
  double seconds = 0;
  std::size_t samples = 0;
};

inline EvalResult evaluate(Model& model, const std::vector<Sample>& split,
                           const Vocabulary& vocab) {
  if (split.empty()) throw DataError("evaluate: empty split");
  const auto start = std::chrono::steady_clock::now();
  std::vector<SeqPair> pairs(split.size());
  // Eval-mode forwards touch no shared state; items fill disjoint slots.
  parallel_rows(split.size(), std::size_t{1} << 20, [&](std::size_t i0, std::size_t i1) {
    for (std::size_t i = i0; i < i1; ++i) {
      const std::vector<int> ids = model.predict_ids(split[i].image);
      pairs[i] = {vocab.decode(split[i].target), vocab.decode(ids)};
    }
  });
  EvalResult res;
  res.samples = split.size();
  res.seq = sequence_metrics(pairs);
  res.notes = note_accuracies(pairs, vocab.encoding());
  res.ned = omr_ned_report(pairs, vocab.encoding());
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                    .count();
  return res;
}

// ---------------------------------------------------------------------------
// Training loop: epoch-style shuffled iteration, periodic validation, best
// checkpoint retained by validation SyER.
// ---------------------------------------------------------------------------

struct TrainOptions {
  long iterations = 1000;
  long eval_every = 500;
  bool augment = true;
  AugmentConfig aug_config = AugmentConfig::defaults();
  std::uint64_t seed = 1;
  std::size_t batch_size = kDefaultBatchSize;
  std::filesystem::path checkpoint_dir;  // empty: keep checkpoints off disk
  std::ostream* log = nullptr;
};

struct TrainResult {
  std::vector<Real> losses;  // one entry per iteration
  double best_val_syer = -1;
  long best_iteration = -1;
  std::size_t infeasible_items = 0;
  double seconds_per_iteration = 0;
  // (iteration, train eval, val eval) at each evaluation point
  struct EvalPoint {
    long iteration;
    double val_syer;
  };
  std::vector<EvalPoint> eval_points;
};

// Deterministic epoch sampler: full shuffled passes, last batch may be short.
class EpochSampler {
 public:
  EpochSampler(std::size_t count, std::uint64_t seed)
      : order_(count), rng_(seed), pos_(count) {
    for (std::size_t i = 0; i < count; ++i) order_[i] = i;
  }

  std::vector<std::size_t> next_batch(std::size_t batch_size) {
    if (pos_ >= order_.size()) {
      // Fisher-Yates reshuffle per epoch
      for (std::size_t i = order_.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(
            rng_.uniform_int(0, static_cast<long>(i) - 1));
        std::swap(order_[i - 1], order_[j]);
      }
      pos_ = 0;
    }
    const std::size_t take = std::min(batch_size, order_.size() - pos_);
    std::vector<std::size_t> out(order_.begin() + static_cast<long>(pos_),
                                 order_.begin() + static_cast<long>(pos_ + take));
    pos_ += take;
    return out;
  }

 private:
  std::vector<std::size_t> order_;
  Rng rng_;
  std::size_t pos_;
};

inline TrainResult train(Model& model, Adam& adam,
                         const std::vector<Sample>& train_set,
                         const std::vector<Sample>& val_set,
                         const Vocabulary& vocab, const TrainOptions& opt) {
  if (train_set.empty()) throw DataError("train: empty training set");
  TrainResult result;
  EpochSampler sampler(train_set.size(), hash_combine(opt.seed, 0x5a5a5a5aULL));
  const auto t0 = std::chrono::steady_clock::now();

  for (long iter = 0; iter < opt.iterations; ++iter) {
    const auto iter_start = std::chrono::steady_clock::now();
    const std::vector<std::size_t> idx = sampler.next_batch(opt.batch_size);
    std::vector<Sample> items;
    items.reserve(idx.size());
    for (std::size_t i : idx) {
      const Sample& base = train_set[i];
      if (opt.augment) {
        Rng rng(augment_seed(opt.seed, base.id, static_cast<std::uint64_t>(iter)));
        Sample aug;
        aug.id = base.id;
        aug.target = base.target;
        aug.image = apply_pipeline(base.image, opt.aug_config, rng);
        items.push_back(std::move(aug));
      } else {
        items.push_back(base);
      }
    }
    Batch batch = make_batch(items, items.size());
    const TrainStepResult step = train_step(model, adam, batch, iter, model.config().schedule);
    result.losses.push_back(step.loss);
    result.infeasible_items += step.infeasible_items;

    const double iter_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - iter_start)
            .count();
    if (opt.log)
      *opt.log << iter << " " << step.loss << " "
               << cosine_lr(iter, model.config().schedule) << " " << iter_sec << "\n";

    const bool last = iter + 1 == opt.iterations;
    if (!val_set.empty() && opt.eval_every > 0 &&
        ((iter + 1) % opt.eval_every == 0 || last)) {
      EvalResult val = evaluate(model, val_set, vocab);
      result.eval_points.push_back({iter + 1, val.seq.syer_pct});
      if (result.best_val_syer < 0 || val.seq.syer_pct < result.best_val_syer) {
        result.best_val_syer = val.seq.syer_pct;
        result.best_iteration = iter + 1;
        if (!opt.checkpoint_dir.empty())
          save_checkpoint(opt.checkpoint_dir / "best.ckpt", model, iter + 1, &adam);
      }
      if (opt.log) {
        const double epoch_iters =
            static_cast<double>(train_set.size()) /
            static_cast<double>(opt.batch_size);
        const double sec_per_iter =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count() /
            static_cast<double>(iter + 1);
        *opt.log << "# eval iter=" << iter + 1 << " val_syer=" << val.seq.syer_pct
                 << " val_seer=" << val.seq.seer_pct
                 << " sec_per_epoch_equiv=" << sec_per_iter * epoch_iters << "\n";
      }
    }
  }
  result.seconds_per_iteration =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() /
      static_cast<double>(std::max<long>(1, opt.iterations));
  if (!opt.checkpoint_dir.empty())
    save_checkpoint(opt.checkpoint_dir / "last.ckpt", model, opt.iterations, &adam);
  return result;
}

}  // namespace omr

#endif  // OMR_TRAINER_HPP_
