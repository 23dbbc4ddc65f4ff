// Copyright 2026 The TWOSL Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: corpus tooling, both training stages, inference,
// evaluation, experiment runs and the filtering benchmark.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "twosl/checksum.hpp"
#include "twosl/contrastive.hpp"
#include "twosl/corpus.hpp"
#include "twosl/encoder.hpp"
#include "twosl/error.hpp"
#include "twosl/experiment.hpp"
#include "twosl/metrics.hpp"
#include "twosl/pipeline.hpp"
#include "twosl/span_classifier.hpp"
#include "twosl/synthetic.hpp"
#include "twosl/token_baseline.hpp"
#include "twosl/toy_encoder.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CorpusOptions {
  std::size_t token_column = 0;
  std::size_t tag_column = 1;
  std::string language;

  void attach(CLI::App* cmd) {
    cmd->add_option("--token-column", token_column, "Column holding the word token");
    cmd->add_option("--tag-column", tag_column, "Column holding the BIO tag");
    cmd->add_option("--language", language, "Language code stored on utterances");
  }
  twosl::Corpus read(const std::string& path, twosl::Split split) const {
    twosl::ColumnFormat f;
    f.token_column = token_column;
    f.tag_column = tag_column;
    f.language = language;
    return twosl::read_bio_corpus(path, split, f);
  }
};

struct ToyOptions {
  std::size_t dim = 32;
  std::uint64_t seed = 0;
  double init_scale = 1.0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--toy-dim", dim, "Dimension of a fresh toy encoder");
    cmd->add_option("--toy-seed", seed, "Seed of a fresh toy encoder");
    cmd->add_option("--toy-init-scale", init_scale, "Initial embedding scale of a fresh toy encoder");
  }
  std::unique_ptr<twosl::SentenceEncoder> make_or_load(const std::string& checkpoint) const {
    if (!checkpoint.empty()) return twosl::load_checkpoint(checkpoint);
    twosl::ToyEncoderConfig cfg;
    cfg.dim = dim;
    cfg.seed = seed;
    cfg.init_scale = init_scale;
    return std::make_unique<twosl::ToyEncoder>(cfg);
  }
};

// Writes to `path`, or stdout when it is empty.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw twosl::ArgumentError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

twosl::TripleMode parse_mode(const std::string& mode) {
  if (mode == "gold") return twosl::TripleMode::kGoldOnly;
  if (mode == "all") return twosl::TripleMode::kAllSpans;
  throw twosl::ArgumentError("mode must be 'gold' or 'all'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-stage few-shot slot labeling"};
  app.require_subcommand(1);

  CorpusOptions corpus_opts;
  ToyOptions toy_opts;
  std::string input, output, encoder_path, step1_path, step2_path, step2_off_path;
  std::size_t max_span = twosl::kDefaultMaxSpan;
  std::string mask_token = twosl::kDefaultMaskToken;

  // stats
  auto* stats = app.add_subcommand("stats", "Print corpus statistics as JSON");
  stats->add_option("--input", input, "BIO column file")->required();
  corpus_opts.attach(stats);

  // synth
  std::size_t synth_train = 200, synth_test = 200;
  std::uint64_t synth_seed = 2023;
  std::string out_dir = ".";
  auto* synth = app.add_subcommand("synth", "Generate the templated synthetic corpus");
  synth->add_option("--train", synth_train, "Training utterances");
  synth->add_option("--test", synth_test, "Test utterances");
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--out-dir", out_dir, "Directory for train.bio and test.bio");

  // triples
  std::string mode = "all";
  auto* triples_cmd = app.add_subcommand("triples", "Write span triples as JSON lines");
  triples_cmd->add_option("--input", input)->required();
  triples_cmd->add_option("--mode", mode, "gold | all");
  triples_cmd->add_option("--max-span", max_span);
  triples_cmd->add_option("--mask-token", mask_token);
  triples_cmd->add_option("--output", output);
  corpus_opts.attach(triples_cmd);

  // pairs
  twosl::Stage1Config s1;
  bool one_to_one = false;
  auto* pairs_cmd = app.add_subcommand("pairs", "Write contrastive pairs as JSON lines");
  pairs_cmd->add_option("--input", input)->required();
  pairs_cmd->add_option("--k", s1.negatives_per_anchor, "Negatives per anchor");
  pairs_cmd->add_flag("--one-to-one", one_to_one, "1:1 positive/negative regime");
  pairs_cmd->add_option("--seed", s1.seed);
  pairs_cmd->add_option("--max-span", max_span);
  pairs_cmd->add_option("--output", output);
  corpus_opts.attach(pairs_cmd);

  // train-stage1
  std::string log_path;
  bool batch_relative = false;
  auto* stage1 = app.add_subcommand("train-stage1", "Contrastive fine-tuning of the encoder");
  stage1->add_option("--input", input)->required();
  stage1->add_option("--encoder", encoder_path, "Checkpoint to start from (default: fresh toy)");
  stage1->add_option("--out", output, "Output checkpoint directory")->required();
  stage1->add_option("--epochs", s1.epochs);
  stage1->add_option("--batch-size", s1.batch_size);
  stage1->add_option("--lr", s1.learning_rate);
  stage1->add_option("--weight-decay", s1.weight_decay);
  stage1->add_option("--margin", s1.margin);
  stage1->add_option("--k", s1.negatives_per_anchor);
  stage1->add_flag("--one-to-one", one_to_one);
  stage1->add_flag("--batch-relative-gate", batch_relative, "Experimental batch-relative hardness");
  stage1->add_option("--seed", s1.seed);
  stage1->add_option("--max-span", max_span);
  stage1->add_option("--log", log_path, "Per-epoch JSON lines log");
  corpus_opts.attach(stage1);
  toy_opts.attach(stage1);

  // train-stage2
  twosl::Stage2Config s2;
  bool no_filter = false;
  auto* stage2 = app.add_subcommand("train-stage2", "Train the span filter and slot classifier");
  stage2->add_option("--input", input)->required();
  stage2->add_option("--encoder", encoder_path)->required();
  stage2->add_option("--step1-out", step1_path, "Binary filter output directory");
  stage2->add_option("--step2-out", step2_path, "Slot-type classifier output directory")->required();
  stage2->add_flag("--no-filter", no_filter, "Train Step 2 with a NONE class and no filter");
  stage2->add_option("--step1-epochs", s2.step1.epochs);
  stage2->add_option("--step2-epochs", s2.step2.epochs);
  stage2->add_option("--step1-lr", s2.step1.learning_rate);
  stage2->add_option("--step2-lr", s2.step2.learning_rate);
  stage2->add_option("--step1-hidden", s2.step1_hidden);
  stage2->add_option("--step2-hidden", s2.step2_hidden);
  stage2->add_option("--max-none-per-sentence", s2.max_none_per_sentence);
  stage2->add_option("--seed", s2.seed);
  stage2->add_option("--max-span", max_span);
  stage2->add_option("--log", log_path);
  std::string encoder_out;
  stage2->add_flag("--fine-tune-encoder", s2.fine_tune_encoder,
                   "Experimental: back-propagate Step 2 into a copy of the encoder");
  stage2->add_option("--encoder-out", encoder_out, "Where the fine-tuned encoder is written");
  corpus_opts.attach(stage2);

  // predict
  auto* predict = app.add_subcommand("predict", "Label a corpus with trained models");
  predict->add_option("--encoder", encoder_path)->required();
  predict->add_option("--step1", step1_path);
  predict->add_option("--step2", step2_path)->required();
  predict->add_option("--input", input)->required();
  predict->add_flag("--no-filter", no_filter);
  predict->add_option("--max-span", max_span);
  predict->add_option("--output", output);
  corpus_opts.attach(predict);

  // evaluate
  std::string gold_path, pred_path;
  auto* evaluate = app.add_subcommand("evaluate", "Token-level micro-F1 of predictions");
  evaluate->add_option("--gold", gold_path)->required();
  evaluate->add_option("--pred", pred_path, "Prediction JSON lines")->required();
  corpus_opts.attach(evaluate);

  // run
  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment grid from a JSON config");
  run->add_option("--config", config_path)->required();

  // bench
  auto* bench = app.add_subcommand("bench", "Compare inference with and without the filter");
  bench->add_option("--encoder", encoder_path)->required();
  bench->add_option("--step1", step1_path)->required();
  bench->add_option("--step2", step2_path, "Step 2 trained without NONE")->required();
  bench->add_option("--step2-no-filter", step2_off_path, "Step 2 trained with NONE")->required();
  bench->add_option("--input", input)->required();
  bench->add_option("--max-span", max_span);
  corpus_opts.attach(bench);

  // silhouette
  std::string projection_out;
  auto* silhouette = app.add_subcommand("silhouette", "Silhouette of gold-span encodings");
  silhouette->add_option("--encoder", encoder_path);
  silhouette->add_option("--input", input)->required();
  silhouette->add_option("--projection-out", projection_out, "Also write a 2-D PCA projection CSV");
  silhouette->add_option("--max-span", max_span);
  corpus_opts.attach(silhouette);
  toy_opts.attach(silhouette);

  // baseline
  std::string test_path;
  twosl::TokenBaselineConfig baseline_cfg;
  auto* baseline = app.add_subcommand("baseline", "Train the token-tagging baseline and label a test file");
  baseline->add_option("--train", input)->required();
  baseline->add_option("--test", test_path)->required();
  baseline->add_option("--encoder", encoder_path);
  baseline->add_option("--epochs", baseline_cfg.schedule.epochs);
  baseline->add_option("--lr", baseline_cfg.schedule.learning_rate);
  baseline->add_option("--seed", baseline_cfg.seed);
  baseline->add_option("--output", output);
  corpus_opts.attach(baseline);
  toy_opts.attach(baseline);

  CLI11_PARSE(app, argc, argv);

  try {
    twosl::PipelineConfig pcfg;
    pcfg.max_span = max_span;
    pcfg.mask_token = mask_token;

    if (*stats) {
      std::cout << twosl::corpus_stats(corpus_opts.read(input, twosl::Split::kTrain)).dump(2) << '\n';
    } else if (*synth) {
      const auto splits = twosl::generate_synthetic_corpus(synth_train, synth_test, synth_seed);
      fs::create_directories(out_dir);
      twosl::write_bio_corpus((fs::path(out_dir) / "train.bio").string(), splits.train);
      twosl::write_bio_corpus((fs::path(out_dir) / "test.bio").string(), splits.test);
    } else if (*triples_cmd) {
      const auto corpus = corpus_opts.read(input, twosl::Split::kTrain);
      const auto set = twosl::make_corpus_triples(corpus, parse_mode(mode), max_span, mask_token);
      Output out(output);
      for (const auto& t : set.triples) out.stream() << twosl::to_json(t).dump() << '\n';
      for (const auto& w : set.warnings)
        std::cerr << "warning: " << w.source_id << ": gold span of length " << w.span.length
                  << " exceeds max span " << max_span << '\n';
    } else if (*pairs_cmd) {
      const auto corpus = corpus_opts.read(input, twosl::Split::kTrain);
      const auto triples =
          twosl::make_corpus_triples(corpus, twosl::TripleMode::kAllSpans, max_span).triples;
      if (one_to_one) s1.regime = twosl::NegativeRegime::kOneToOne;
      const auto pairs = twosl::build_stage1_pairs(triples, s1);
      Output out(output);
      for (const auto& p : pairs.pairs) out.stream() << twosl::pair_to_json(triples, p).dump() << '\n';
      for (const auto& w : pairs.warnings) std::cerr << "warning: " << w.message << '\n';
    } else if (*stage1) {
      const auto corpus = corpus_opts.read(input, twosl::Split::kTrain);
      auto base = toy_opts.make_or_load(encoder_path);
      auto* trainable = dynamic_cast<twosl::TrainableEncoder*>(base.get());
      if (!trainable) throw twosl::ConfigError("encoder is not trainable");
      if (one_to_one) s1.regime = twosl::NegativeRegime::kOneToOne;
      if (batch_relative) s1.gate = twosl::HardGate::kBatchRelative;
      const auto triples =
          twosl::make_corpus_triples(corpus, twosl::TripleMode::kAllSpans, max_span).triples;
      const auto pairs = twosl::build_stage1_pairs(triples, s1);
      for (const auto& w : pairs.warnings) std::cerr << "warning: " << w.message << '\n';
      std::optional<std::ofstream> log;
      if (!log_path.empty()) log.emplace(log_path);
      const auto report = twosl::train_stage1(*trainable, triples, pairs.pairs, s1,
                                              [&](const twosl::Stage1EpochLog& e) {
                                                const auto line = twosl::to_json(e).dump();
                                                std::cerr << line << '\n';
                                                if (log) *log << line << '\n';
                                              });
      for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << twosl::save_checkpoint(*trainable, output).dump(2) << '\n';
    } else if (*stage2) {
      const auto corpus = corpus_opts.read(input, twosl::Split::kTrain);
      const auto encoder = twosl::load_checkpoint(encoder_path);
      std::optional<std::ofstream> log;
      if (!log_path.empty()) log.emplace(log_path);
      auto logger = [&](const std::string& step) {
        return [&, step](const twosl::MLPEpochLog& e) {
          const json j = {{"step", step}, {"epoch", e.epoch}, {"mean_loss", e.mean_loss},
                          {"accuracy", e.accuracy}};
          if (log) *log << j.dump() << '\n';
        };
      };
      auto all = twosl::make_corpus_triples(corpus, twosl::TripleMode::kAllSpans, max_span).triples;
      all = twosl::cap_none_triples(all, s2.max_none_per_sentence, s2.seed);
      const auto gold =
          twosl::make_corpus_triples(corpus, twosl::TripleMode::kGoldOnly, max_span).triples;
      if (!no_filter && step1_path.empty())
        throw twosl::ArgumentError("--step1-out is required unless --no-filter");
      s2.include_none_class = no_filter;
      const twosl::SentenceEncoder* enc = encoder.get();
      std::unique_ptr<twosl::TrainableEncoder> tuned;
      if (s2.fine_tune_encoder) {
        if (encoder_out.empty())
          throw twosl::ArgumentError("--encoder-out is required with --fine-tune-encoder");
        const auto* trainable = dynamic_cast<const twosl::TrainableEncoder*>(encoder.get());
        if (!trainable) throw twosl::ConfigError("fine-tuning needs a trainable encoder");
        tuned = trainable->clone();
        twosl::save_classifier(
            twosl::train_step2_end_to_end(no_filter ? all : gold, *tuned, corpus.ontology,
                                          no_filter, s2, logger("step2"))
                .classifier,
            step2_path);
        twosl::save_checkpoint(*tuned, encoder_out);
        enc = tuned.get();
      } else {
        const auto d2 =
            twosl::build_step2_training_set(no_filter ? all : gold, *enc, corpus.ontology, no_filter);
        twosl::save_classifier(twosl::train_step2(d2, *enc, s2, logger("step2")).classifier,
                               step2_path);
      }
      if (!no_filter) {
        const auto d1 = twosl::build_step1_training_set(all, *enc);
        twosl::save_classifier(twosl::train_step1(d1, *enc, s2, logger("step1")).classifier,
                               step1_path);
      }
    } else if (*predict) {
      const auto corpus = corpus_opts.read(input, twosl::Split::kTest);
      const auto encoder = twosl::load_checkpoint(encoder_path);
      std::optional<twosl::SpanClassifier> step1;
      if (!step1_path.empty()) step1 = twosl::load_classifier(step1_path);
      const auto step2 = twosl::load_classifier(step2_path);
      pcfg.use_step1_filter = !no_filter;
      Output out(output);
      for (const auto& u : corpus.utterances) {
        const auto pred =
            twosl::predict_utterance(*encoder, step1 ? &*step1 : nullptr, step2, u, pcfg);
        out.stream() << twosl::prediction_to_json(u, pred).dump() << '\n';
      }
    } else if (*evaluate) {
      const auto gold = corpus_opts.read(gold_path, twosl::Split::kTest);
      std::ifstream in(pred_path);
      if (!in) throw twosl::ArgumentError("cannot open " + pred_path);
      const auto preds = twosl::read_predictions(in);
      if (preds.size() != gold.size())
        throw twosl::ArgumentError("gold has " + std::to_string(gold.size()) +
                                   " utterances, predictions " + std::to_string(preds.size()));
      std::vector<std::vector<std::string>> g, p;
      for (std::size_t i = 0; i < gold.size(); ++i) {
        if (preds[i].id != gold.utterances[i].id)
          throw twosl::ArgumentError("prediction " + std::to_string(i) + " has id " + preds[i].id +
                                     ", gold has " + gold.utterances[i].id);
        g.push_back(gold.utterances[i].labels);
        p.push_back(preds[i].labels);
      }
      std::cout << twosl::to_json(twosl::token_micro_f1(g, p)).dump(2) << '\n';
    } else if (*run) {
      const auto config = json::parse(twosl::read_file(config_path));
      const auto cfg = twosl::experiment_config_from_json(config, fs::path(config_path).parent_path());
      const auto report = twosl::run_experiment(cfg, [](const std::string& m) { std::cerr << m << '\n'; });
      std::cout << report.summary.dump(2) << '\n';
    } else if (*bench) {
      const auto corpus = corpus_opts.read(input, twosl::Split::kTest);
      const auto encoder = twosl::load_checkpoint(encoder_path);
      const auto report = twosl::bench_filtering(
          *encoder, twosl::load_classifier(step1_path), twosl::load_classifier(step2_path),
          twosl::load_classifier(step2_off_path), corpus, pcfg);
      std::cout << twosl::to_json(report).dump(2) << '\n';
    } else if (*silhouette) {
      const auto corpus = corpus_opts.read(input, twosl::Split::kTest);
      const auto encoder = toy_opts.make_or_load(encoder_path);
      const auto triples =
          twosl::make_corpus_triples(corpus, twosl::TripleMode::kGoldOnly, max_span).triples;
      std::vector<std::string> labels;
      for (const auto& t : triples) labels.push_back(*t.label);
      const auto x = twosl::encode_pair_items(*encoder, triples);
      std::cout << json{{"silhouette", twosl::silhouette_score(x, labels)}, {"points", labels.size()}}.dump()
                << '\n';
      if (!projection_out.empty())
        twosl::export_projection(x, labels, twosl::pca_projection, 0, projection_out);
    } else if (*baseline) {
      const auto train = corpus_opts.read(input, twosl::Split::kTrain);
      auto test = corpus_opts.read(test_path, twosl::Split::kTest);
      auto train_with_all = train;
      train_with_all.ontology = twosl::SlotOntology::merge(train.ontology, test.ontology);
      const auto base = toy_opts.make_or_load(encoder_path);
      const auto* tok = dynamic_cast<const twosl::TokenEncoder*>(base.get());
      if (!tok) throw twosl::ConfigError("the baseline needs an encoder with per-token outputs");
      const auto model = twosl::train_token_baseline(*tok, train_with_all, baseline_cfg);
      Output out(output);
      std::vector<std::vector<std::string>> g, p;
      for (const auto& u : test.utterances) {
        const auto labels = twosl::predict_tags(model, u);
        g.push_back(u.labels);
        p.push_back(labels);
        out.stream() << json{{"id", u.id}, {"tokens", u.tokens}, {"predicted_labels", labels},
                             {"spans", json::array()}, {"step2_invocations", 0}}.dump()
                     << '\n';
      }
      std::cerr << twosl::to_json(twosl::token_micro_f1(g, p)).dump() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
