// tools/omr_main.cpp

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
// Command-line front door. Subcommands: synth, train, evaluate, predict,
// augment-preview, score. Exit codes: 0 success, 1 usage error, 2 data
// error, 3 numeric failure. Every run echoes its fully resolved
// configuration before acting. OMRF_THREADS caps worker parallelism
// (0 = strict single-threaded).

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "omr/augment.hpp"
#include "omr/checkpoint.hpp"
#include "omr/data.hpp"
#include "omr/metrics.hpp"
#include "omr/model.hpp"
#include "omr/synth.hpp"
#include "omr/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace omr;

namespace {

SplitFractions parse_split(const std::string& s) {
  SplitFractions f;
  if (std::sscanf(s.c_str(), "%lf,%lf,%lf", &f.train, &f.val, &f.test) != 3 ||
      f.train < 0 || f.val < 0 || f.test < 0 ||
      std::abs(f.train + f.val + f.test - 1.0) > 1e-9)
    throw DataError("--split expects three fractions summing to 1, got '" + s + "'");
  return f;
}

void echo_config(const std::string& subcommand, const json& resolved) {
  std::cout << "config: "
            << json{{"subcommand", subcommand}, {"resolved", resolved}}.dump()
            << "\n";
}

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw DataError("cannot read config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("config file " + path + " is not valid JSON: " + e.what());
  }
  return j;
}

// Defaults, overlaid with the config file's "model" object (merge-patch);
// explicit flags are applied on top by the caller.
ModelConfig resolve_model_config(const json& file_cfg, std::size_t vocab_size) {
  json merged = json(ModelConfig{});
  if (file_cfg.contains("model")) merged.merge_patch(file_cfg.at("model"));
  ModelConfig cfg = merged.get<ModelConfig>();
  cfg.vocab_size = vocab_size;
  return cfg;
}

AugmentConfig resolve_augment_config(const json& file_cfg) {
  AugmentConfig cfg = AugmentConfig::defaults();
  if (!file_cfg.contains("augment")) return cfg;
  for (const auto& [name, overrides] : file_cfg.at("augment").items()) {
    AugmentOp* op = cfg.find(name);
    if (!op) throw DataError("config overrides unknown augmentation op '" + name + "'");
    for (const auto& [key, value] : overrides.items()) {
      if (key == "probability")
        op->probability = value.get<double>();
      else if (op->params.count(key))
        op->params[key] = value.get<double>();
      else
        throw DataError("augmentation op '" + name + "' has no parameter '" + key + "'");
    }
  }
  return cfg;
}

std::vector<fs::path> scan_images(const fs::path& root) {
  if (!fs::exists(root) || !fs::is_directory(root))
    throw DataError("directory does not exist: " + root.string());
  std::vector<fs::path> images;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file() && is_image_file(e.path())) images.push_back(e.path());
  std::sort(images.begin(), images.end(),
            [](const fs::path& a, const fs::path& b) { return a.string() < b.string(); });
  if (images.empty()) throw DataError("no images under " + root.string());
  return images;
}

// Token sets keyed by sample id: a directory of token files, or a manifest
// with one "id token token ..." line per sample.
std::map<std::string, TokenSeq> load_token_set(const fs::path& path, Encoding enc) {
  std::map<std::string, TokenSeq> out;
  if (fs::is_directory(path)) {
    const std::string ext = std::string(".") + encoding_name(enc);
    for (const auto& e : fs::recursive_directory_iterator(path)) {
      if (!e.is_regular_file() || e.path().extension().string() != ext) continue;
      const std::string id =
          fs::relative(e.path(), path).replace_extension("").generic_string();
      out[id] = read_token_file(e.path());
    }
  } else if (fs::is_regular_file(path)) {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream is(line);
      std::string id, tok;
      if (!(is >> id)) continue;
      TokenSeq& seq = out[id];
      while (is >> tok) seq.push_back(tok);
    }
  } else {
    throw DataError("token set not found: " + path.string());
  }
  if (out.empty()) throw DataError("no token sequences under " + path.string());
  return out;
}

struct ReportNumbers {
  std::size_t samples = 0;
  SequenceMetrics seq;
  NoteAccuracies notes;
  OmrNedReport ned;
};

// Machine-readable key=value block first, then the human table.
void print_report(std::ostream& os, const ReportNumbers& r) {
  char buf[96];
  auto f4 = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return std::string(buf);
  };
  os << "[report]\n";
  os << "samples=" << r.samples << "\n";
  os << "seer_pct=" << f4(r.seq.seer_pct) << "\n";
  os << "syer_pct=" << f4(r.seq.syer_pct) << "\n";
  os << "pitch_acc_pct=" << f4(r.notes.pitch_pct) << "\n";
  os << "type_acc_pct=" << f4(r.notes.type_pct) << "\n";
  os << "note_acc_pct=" << f4(r.notes.note_pct) << "\n";
  os << "omr_ned_overall_pct=" << f4(r.ned.overall_pct) << "\n";
  os << "[end]\n";

  std::snprintf(buf, sizeof buf, "%-16s %6s %6s %8s %8s %12s %11s", "Category", "I",
                "D", "N1", "N2", "OMR-NED (%)", "Errors (%)");
  os << buf << "\n";
  for (const auto& row : r.ned.rows) {
    std::snprintf(buf, sizeof buf, "%-16s %6zu %6zu %8zu %8zu %12.2f %11.2f",
                  row.category.c_str(), row.insertions, row.deletions,
                  row.pred_count, row.gt_count, row.ned_pct, row.error_share_pct);
    os << buf << "\n";
  }
  std::snprintf(buf, sizeof buf, "%-16s %6s %6s %8s %8s %12.2f %11s", "Overall", "-",
                "-", "-", "-", r.ned.overall_pct, "-");
  os << buf << "\n";
  std::snprintf(buf, sizeof buf, "SeER %.2f%%  SyER %.2f%%", r.seq.seer_pct,
                r.seq.syer_pct);
  os << buf << "\n";
  std::snprintf(buf, sizeof buf,
                "Pitch acc %.2f%%  Type acc %.2f%%  Note acc %.2f%%",
                r.notes.pitch_pct, r.notes.type_pct, r.notes.note_pct);
  os << buf << "\n";
}

struct CorpusBundle {
  std::vector<Sample> train, val, test;
  Vocabulary vocab;
};

CorpusBundle load_and_split(const fs::path& root, Encoding enc,
                            const SplitFractions& fractions, bool skip_infeasible,
                            std::ostream& log) {
  CorpusLoadStats stats;
  auto entries = load_corpus(root, enc, &stats, &log);
  if (stats.skipped) log << "skipped " << stats.skipped << " malformed pair(s)\n";
  std::vector<TokenSeq> lists;
  for (const auto& e : entries) lists.push_back(e.tokens);
  CorpusBundle bundle;
  bundle.vocab = Vocabulary::build(lists, enc);
  for (const auto& e : entries) {
    Sample s;
    try {
      s = make_sample(e, bundle.vocab);
    } catch (const DataError& err) {
      log << "warning: skipping " << e.id << ": " << err.what() << "\n";
      continue;
    }
    const Split split = split_of(e.id, fractions);
    if (split == Split::Train && skip_infeasible && !ctc_feasible(s)) {
      log << "warning: skipping " << e.id << " (target too long for its width)\n";
      continue;
    }
    switch (split) {
      case Split::Train: bundle.train.push_back(std::move(s)); break;
      case Split::Val: bundle.val.push_back(std::move(s)); break;
      case Split::Test: bundle.test.push_back(std::move(s)); break;
    }
  }
  return bundle;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"End-to-end optical music recognition toolkit"};
  app.require_subcommand(1);

  // synth ------------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "generate a synthetic toy corpus");
  std::string synth_out;
  SynthSpec synth_spec;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--n", synth_spec.count, "number of samples");
  synth->add_option("--seed", synth_spec.seed, "generator seed");
  synth->add_option("--vocab-size", synth_spec.vocab_size, "vocabulary size (<= 32)");
  synth->add_option("--min-tokens", synth_spec.min_tokens, "minimum tokens per staff");
  synth->add_option("--max-tokens", synth_spec.max_tokens, "maximum tokens per staff");

  // shared options -----------------------------------------------------------
  std::string corpus_root, encoding_str = "semantic", config_path, out_dir;
  std::string split_str = "0.8,0.1,0.1";
  std::uint64_t seed = 1;
  long iters = -1;
  std::size_t batch = 0;
  std::string augment_str = "on";
  std::string checkpoint_path, vocab_path;

  auto* train_cmd = app.add_subcommand("train", "train a model on a corpus");
  train_cmd->add_option("--corpus", corpus_root, "corpus root directory")->required();
  train_cmd->add_option("--encoding", encoding_str, "semantic|agnostic");
  train_cmd->add_option("--config", config_path, "JSON config file");
  train_cmd->add_option("--seed", seed, "training seed");
  train_cmd->add_option("--out", out_dir, "output directory")->required();
  train_cmd->add_option("--split", split_str, "train,val,test fractions");
  train_cmd->add_option("--iters", iters, "training iterations");
  train_cmd->add_option("--batch", batch, "batch size");
  train_cmd->add_option("--augment", augment_str, "on|off")
      ->check(CLI::IsMember({"on", "off"}));

  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a checkpoint");
  std::string eval_split = "test";
  eval_cmd->add_option("--corpus", corpus_root, "corpus root directory")->required();
  eval_cmd->add_option("--encoding", encoding_str, "semantic|agnostic");
  eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  eval_cmd->add_option("--vocab", vocab_path,
                       "vocabulary file (default: sibling vocab.txt)");
  eval_cmd->add_option("--split", split_str, "train,val,test fractions");
  eval_cmd->add_option("--eval-split", eval_split, "train|val|test|all")
      ->check(CLI::IsMember({"train", "val", "test", "all"}));

  auto* predict_cmd = app.add_subcommand("predict", "decode token files for images");
  predict_cmd->add_option("--corpus", corpus_root, "directory of images")->required();
  predict_cmd->add_option("--encoding", encoding_str, "semantic|agnostic");
  predict_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  predict_cmd->add_option("--vocab", vocab_path,
                          "vocabulary file (default: sibling vocab.txt)");
  predict_cmd->add_option("--out", out_dir, "output directory")->required();

  auto* preview_cmd =
      app.add_subcommand("augment-preview", "write before/after augmentation pairs");
  std::size_t preview_n = 8;
  preview_cmd->add_option("--corpus", corpus_root, "directory of images")->required();
  preview_cmd->add_option("--n", preview_n, "number of images");
  preview_cmd->add_option("--seed", seed, "augmentation seed");
  preview_cmd->add_option("--config", config_path, "JSON config file");
  preview_cmd->add_option("--out", out_dir, "output directory")->required();

  auto* score_cmd =
      app.add_subcommand("score", "run the metric suite on two token sets");
  std::string gt_path, pred_path;
  score_cmd
      ->add_option("ground_truth", gt_path, "directory or manifest of reference tokens")
      ->required();
  score_cmd
      ->add_option("prediction", pred_path, "directory or manifest of predicted tokens")
      ->required();
  score_cmd->add_option("--encoding", encoding_str, "semantic|agnostic");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // usage error
  }

  if (synth->parsed()) {
    echo_config("synth", json{{"out", synth_out},
                              {"n", synth_spec.count},
                              {"seed", synth_spec.seed},
                              {"vocab_size", synth_spec.vocab_size},
                              {"min_tokens", synth_spec.min_tokens},
                              {"max_tokens", synth_spec.max_tokens}});
    synth_generate(synth_out, synth_spec);
    std::cout << "wrote " << synth_spec.count << " samples to " << synth_out << "\n";
    return 0;
  }

  const Encoding enc = parse_encoding(encoding_str);

  if (train_cmd->parsed()) {
    const json file_cfg = load_config_file(config_path);
    const SplitFractions fractions = parse_split(split_str);
    CorpusBundle bundle =
        load_and_split(corpus_root, enc, fractions, /*skip_infeasible=*/true, std::cerr);
    if (bundle.train.empty()) throw DataError("no training samples under " + corpus_root);

    ModelConfig cfg = resolve_model_config(file_cfg, bundle.vocab.size());
    if (iters >= 0) cfg.max_iterations = iters;
    if (batch > 0) cfg.batch_size = batch;
    cfg.seed = seed;
    cfg.augment = augment_str != "off";
    if (cfg.schedule.t_max > cfg.max_iterations) cfg.schedule.t_max = cfg.max_iterations;
    AugmentConfig aug = resolve_augment_config(file_cfg);

    echo_config("train", json{{"corpus", corpus_root},
                              {"encoding", encoding_str},
                              {"split", split_str},
                              {"out", out_dir},
                              {"model", json(cfg)},
                              {"train_samples", bundle.train.size()},
                              {"val_samples", bundle.val.size()},
                              {"test_samples", bundle.test.size()}});

    fs::create_directories(out_dir);
    bundle.vocab.save(fs::path(out_dir) / "vocab.txt");
    {
      std::ofstream cfg_out(fs::path(out_dir) / "config.json");
      cfg_out << json(cfg).dump(2) << "\n";
    }

    Rng init_rng(hash_combine(cfg.seed, 0x1717ULL));
    Model model(cfg, init_rng);
    Adam adam(cfg.adam);
    model.visit_params([&](const std::string& n, Param& p) { adam.bind(n, p); });

    std::ofstream log(fs::path(out_dir) / "train.log");
    TrainOptions opt;
    opt.iterations = cfg.max_iterations;
    opt.eval_every = cfg.eval_every;
    opt.augment = cfg.augment;
    opt.aug_config = aug;
    opt.seed = cfg.seed;
    opt.batch_size = cfg.batch_size;
    opt.checkpoint_dir = out_dir;
    opt.log = &log;
    TrainResult result = train(model, adam, bundle.train, bundle.val, bundle.vocab, opt);

    std::cout << "trained " << cfg.max_iterations << " iterations";
    if (result.best_val_syer >= 0)
      std::cout << "; best val SyER " << result.best_val_syer << "% at iteration "
                << result.best_iteration;
    std::cout << "; " << result.seconds_per_iteration << " s/iter";
    if (result.infeasible_items)
      std::cout << "; " << result.infeasible_items << " infeasible item(s) skipped";
    std::cout << "\ncheckpoints in " << out_dir << "\n";
    return 0;
  }

  if (eval_cmd->parsed()) {
    const SplitFractions fractions = parse_split(split_str);
    if (vocab_path.empty())
      vocab_path = (fs::path(checkpoint_path).parent_path() / "vocab.txt").string();
    echo_config("evaluate", json{{"corpus", corpus_root},
                                 {"encoding", encoding_str},
                                 {"checkpoint", checkpoint_path},
                                 {"vocab", vocab_path},
                                 {"split", split_str},
                                 {"eval_split", eval_split}});
    Vocabulary vocab = Vocabulary::load(vocab_path, enc);
    Checkpoint ckpt = load_checkpoint(checkpoint_path);
    if (ckpt.config.vocab_size != vocab.size())
      throw DataError("vocabulary size " + std::to_string(vocab.size()) +
                      " does not match checkpoint vocab size " +
                      std::to_string(ckpt.config.vocab_size));
    Rng rng(1);
    Model model(ckpt.config, rng);
    apply_checkpoint(ckpt, model);

    CorpusBundle bundle =
        load_and_split(corpus_root, enc, fractions, /*skip_infeasible=*/false, std::cerr);
    std::vector<Sample> chosen;
    if (eval_split == "train") chosen = std::move(bundle.train);
    else if (eval_split == "val") chosen = std::move(bundle.val);
    else if (eval_split == "test") chosen = std::move(bundle.test);
    else if (eval_split == "all") {
      chosen = std::move(bundle.train);
      chosen.insert(chosen.end(), bundle.val.begin(), bundle.val.end());
      chosen.insert(chosen.end(), bundle.test.begin(), bundle.test.end());
    } else {
      throw DataError("--eval-split must be train|val|test|all");
    }
    EvalResult res = evaluate(model, chosen, vocab);
    ReportNumbers numbers{res.samples, res.seq, res.notes, res.ned};
    print_report(std::cout, numbers);
    std::cout << "evaluated " << res.samples << " samples in " << res.seconds << " s\n";
    return 0;
  }

  if (predict_cmd->parsed()) {
    if (vocab_path.empty())
      vocab_path = (fs::path(checkpoint_path).parent_path() / "vocab.txt").string();
    echo_config("predict", json{{"corpus", corpus_root},
                                {"encoding", encoding_str},
                                {"checkpoint", checkpoint_path},
                                {"vocab", vocab_path},
                                {"out", out_dir}});
    Vocabulary vocab = Vocabulary::load(vocab_path, enc);
    Checkpoint ckpt = load_checkpoint(checkpoint_path);
    Rng rng(1);
    Model model(ckpt.config, rng);
    apply_checkpoint(ckpt, model);
    fs::create_directories(out_dir);

    const auto images = scan_images(corpus_root);
    std::size_t written = 0;
    for (const auto& img_path : images) {
      Tensor image;
      try {
        image = preprocess_image(load_image(img_path));
      } catch (const DataError& err) {
        std::cerr << "warning: skipping " << img_path.string() << ": " << err.what()
                  << "\n";
        continue;
      }
      const std::vector<int> ids = model.predict_ids(image);
      const TokenSeq tokens = vocab.decode(ids);
      const fs::path rel = fs::relative(img_path, corpus_root);
      fs::path out_file = fs::path(out_dir) / rel;
      out_file.replace_extension(std::string(".") + encoding_name(enc));
      if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
      std::ofstream out(out_file, std::ios::binary);
      for (std::size_t i = 0; i < tokens.size(); ++i)
        out << (i ? " " : "") << tokens[i];
      out << "\n";
      ++written;
    }
    std::cout << "wrote " << written << " prediction file(s) to " << out_dir << "\n";
    return 0;
  }

  if (preview_cmd->parsed()) {
    const json file_cfg = load_config_file(config_path);
    AugmentConfig aug = resolve_augment_config(file_cfg);
    echo_config("augment-preview", json{{"corpus", corpus_root},
                                        {"n", preview_n},
                                        {"seed", seed},
                                        {"out", out_dir}});
    fs::create_directories(out_dir);
    const auto images = scan_images(corpus_root);
    std::size_t written = 0;
    for (const auto& img_path : images) {
      if (written >= preview_n) break;
      Tensor image;
      try {
        image = preprocess_image(load_image(img_path));
      } catch (const DataError&) {
        continue;
      }
      const std::string stem = img_path.stem().string();
      Rng rng(augment_seed(seed, stem, 0));
      Tensor augmented = apply_pipeline(image, aug, rng);
      save_pgm(fs::path(out_dir) / (stem + "_orig.pgm"), image_from_tensor(image));
      save_pgm(fs::path(out_dir) / (stem + "_aug.pgm"), image_from_tensor(augmented));
      ++written;
    }
    std::cout << "wrote " << written << " before/after pair(s) to " << out_dir << "\n";
    return 0;
  }

  if (score_cmd->parsed()) {
    echo_config("score", json{{"ground_truth", gt_path},
                              {"prediction", pred_path},
                              {"encoding", encoding_str}});
    const auto gt = load_token_set(gt_path, enc);
    const auto pred = load_token_set(pred_path, enc);
    std::vector<SeqPair> pairs;
    std::size_t missing = 0;
    for (const auto& [id, tokens] : gt) {
      auto it = pred.find(id);
      if (it == pred.end()) {
        ++missing;
        pairs.emplace_back(tokens, TokenSeq{});
      } else {
        pairs.emplace_back(tokens, it->second);
      }
    }
    if (missing)
      std::cerr << "warning: " << missing
                << " id(s) missing from the prediction set scored as empty\n";
    ReportNumbers numbers;
    numbers.samples = pairs.size();
    numbers.seq = sequence_metrics(pairs);
    numbers.notes = note_accuracies(pairs, enc);
    numbers.ned = omr_ned_report(pairs, enc);
    print_report(std::cout, numbers);
    return 0;
  }

  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 3;
  }
}
