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

#include "twosl/experiment.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "twosl/checksum.hpp"
#include "twosl/error.hpp"
#include "twosl/metrics.hpp"
#include "twosl/toy_encoder.hpp"

namespace twosl {
namespace fs = std::filesystem;
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

ColumnFormat format_from_json(const nlohmann::json& j, const std::string& language) {
  ColumnFormat f;
  f.token_column = j.value("token_column", f.token_column);
  f.tag_column = j.value("tag_column", f.tag_column);
  f.num_columns = j.value("num_columns", f.num_columns);
  f.language = j.value("language", language);
  return f;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

std::string system_name(bool with_cl, bool with_step1) {
  std::string name = with_cl ? "twosl_cl" : "twosl_no_cl";
  if (!with_step1) name += "_no_filter";
  return name;
}

const std::vector<std::string>& system_order() {
  static const std::vector<std::string> kOrder = {"token_baseline", "twosl_no_cl", "twosl_cl",
                                                  "twosl_no_cl_no_filter", "twosl_cl_no_filter"};
  return kOrder;
}

std::vector<std::vector<std::string>> gold_labels(const Corpus& corpus) {
  std::vector<std::vector<std::string>> out;
  for (const auto& u : corpus.utterances) out.push_back(u.labels);
  return out;
}

std::optional<nlohmann::json> load_completed(const fs::path& dir) {
  const fs::path path = dir / "metrics.json";
  if (!fs::exists(path)) return std::nullopt;
  try {
    auto j = nlohmann::json::parse(read_file(path));
    if (j.value("status", std::string()) == "ok") return j;
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

void write_jsonl(const fs::path& path, const std::vector<nlohmann::json>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.dump() + "\n";
  write_file_atomic(path, out);
}

// Encodings and labels of the gold slot spans of `corpus`.
std::pair<Eigen::MatrixXd, std::vector<std::string>> gold_span_points(
    const SentenceEncoder& encoder, const Corpus& corpus, const PipelineConfig& pcfg) {
  const auto triples =
      make_corpus_triples(corpus, TripleMode::kGoldOnly, pcfg.max_span, pcfg.mask_token).triples;
  std::vector<std::string> labels;
  for (const auto& t : triples) labels.push_back(*t.label);
  return {encode_pair_items(encoder, triples, pcfg.batch_size), labels};
}

struct TrainedStage2 {
  SpanClassifier step1;
  SpanClassifier step2;
  bool has_step1 = false;
  // Set when Step 2 fine-tuned a copy of the encoder; inference must use it.
  std::shared_ptr<const SentenceEncoder> tuned_encoder;
};

// Stage 2 for one regime; with a transfer corpus the classifiers are first
// trained on it and then fine-tuned on the target sample.
TrainedStage2 train_stage2(const SentenceEncoder& encoder, const Corpus& sample,
                           const Corpus* transfer, const SlotOntology& ontology, bool with_step1,
                           const ExperimentConfig& cfg, std::uint64_t seed,
                           std::vector<nlohmann::json>& log) {
  Stage2Config s2 = cfg.stage2;
  s2.seed = seed;
  s2.include_none_class = !with_step1;
  const auto& p = cfg.pipeline;

  auto phase_data = [&](const Corpus& c) {
    auto all = make_corpus_triples(c, TripleMode::kAllSpans, p.max_span, p.mask_token).triples;
    all = cap_none_triples(all, s2.max_none_per_sentence, seed);
    auto gold = make_corpus_triples(c, TripleMode::kGoldOnly, p.max_span, p.mask_token).triples;
    return std::make_pair(std::move(all), std::move(gold));
  };
  auto logger = [&](const std::string& phase) {
    return [&log, phase](const MLPEpochLog& e) {
      log.push_back({{"phase", phase},
                     {"epoch", e.epoch},
                     {"mean_loss", e.mean_loss},
                     {"accuracy", e.accuracy}});
    };
  };

  std::vector<std::pair<std::string, const Corpus*>> phases;
  if (transfer) phases.emplace_back("transfer", transfer);
  phases.emplace_back("target", &sample);

  TrainedStage2 out;
  out.has_step1 = with_step1;
  bool first = true;
  if (s2.fine_tune_encoder) {
    // Step 2 trains jointly with the encoder first, then the filter is fitted
    // on the resulting encoder so both classifiers see the same vectors.
    const auto* trainable = dynamic_cast<const TrainableEncoder*>(&encoder);
    if (!trainable) throw ConfigError("fine_tune_encoder needs a trainable encoder");
    std::shared_ptr<TrainableEncoder> tuned = trainable->clone();
    for (const auto& [phase, corpus] : phases) {
      auto [all, gold] = phase_data(*corpus);
      const auto& step2_triples = with_step1 ? gold : all;
      out.step2 = train_step2_end_to_end(step2_triples, *tuned, ontology, !with_step1, s2,
                                         logger(phase + "/step2"),
                                         first ? nullptr : &out.step2.model)
                      .classifier;
      if (with_step1) {
        const auto d1 = build_step1_training_set(all, *tuned, s2.encode_batch_size);
        if (first) {
          out.step1 = train_step1(d1, *tuned, s2, logger(phase + "/step1")).classifier;
        } else {
          out.step1.model = continue_training(std::move(out.step1.model), d1, s2.step1, seed,
                                              logger(phase + "/step1")).model;
        }
      }
      first = false;
    }
    out.tuned_encoder = tuned;
    return out;
  }
  for (const auto& [phase, corpus] : phases) {
    auto [all, gold] = phase_data(*corpus);
    if (with_step1) {
      const auto d1 = build_step1_training_set(all, encoder, s2.encode_batch_size);
      const auto d2 = build_step2_training_set(gold, encoder, ontology, false, s2.encode_batch_size);
      if (first) {
        out.step1 = train_step1(d1, encoder, s2, logger(phase + "/step1")).classifier;
        out.step2 = train_step2(d2, encoder, s2, logger(phase + "/step2")).classifier;
      } else {
        out.step1.model = continue_training(std::move(out.step1.model), d1, s2.step1, seed,
                                            logger(phase + "/step1")).model;
        out.step2.model = continue_training(std::move(out.step2.model), d2.data, s2.step2,
                                            seed + 1, logger(phase + "/step2")).model;
      }
    } else {
      const auto d2 = build_step2_training_set(all, encoder, ontology, true, s2.encode_batch_size);
      if (first) {
        out.step2 = train_step2(d2, encoder, s2, logger(phase + "/step2")).classifier;
      } else {
        out.step2.model = continue_training(std::move(out.step2.model), d2.data, s2.step2,
                                            seed + 1, logger(phase + "/step2")).model;
      }
    }
    first = false;
  }
  return out;
}

nlohmann::json f1_metrics(const F1Report& r) {
  return {{"f1", r.f1}, {"precision", r.precision}, {"recall", r.recall},
          {"tp", r.tp}, {"fp", r.fp},               {"fn", r.fn},
          {"per_type", to_json(r)["per_type"]}};
}

nlohmann::json summarize(const ExperimentConfig& cfg, const std::vector<CellResult>& cells,
                         const fs::path& csv_path) {
  // (M, system) -> F1 values over seeds, in points.
  std::map<std::pair<std::size_t, std::string>, std::vector<double>> f1s;
  std::vector<std::string> systems;
  for (const auto& c : cells) {
    const auto& m = c.metrics;
    const auto system = m.value("system", std::string());
    if (std::find(systems.begin(), systems.end(), system) == systems.end()) systems.push_back(system);
    if (m.value("status", std::string()) != "ok") continue;
    f1s[{m.at("M").get<std::size_t>(), system}].push_back(100.0 * m.at("f1").get<double>());
  }
  std::vector<std::string> ordered;
  for (const auto& s : system_order())
    if (std::find(systems.begin(), systems.end(), s) != systems.end()) ordered.push_back(s);

  nlohmann::json rows = nlohmann::json::array();
  std::ostringstream csv;
  csv << "language,M";
  for (const auto& s : ordered) csv << ',' << s << "_mean," << s << "_std," << s << "_n";
  csv << '\n';
  csv.setf(std::ios::fixed);
  csv.precision(2);
  for (auto m : cfg.sizes) {
    nlohmann::json row = {{"language", cfg.language}, {"M", m}};
    csv << cfg.language << ',' << m;
    for (const auto& s : ordered) {
      const auto it = f1s.find({m, s});
      const auto values = it == f1s.end() ? std::vector<double>{} : it->second;
      const auto ms = mean_std(values);
      row[s] = {{"f1_mean", ms.mean}, {"f1_std", ms.stddev}, {"n", values.size()}};
      csv << ',' << ms.mean << ',' << ms.stddev << ',' << values.size();
    }
    csv << '\n';
    rows.push_back(row);
  }
  write_file_atomic(csv_path, csv.str());
  return {{"language", cfg.language}, {"systems", ordered}, {"rows", rows}};
}

}  // namespace

std::string cell_name(std::size_t m, std::uint64_t seed, bool with_cl, bool with_step1) {
  return "M" + std::to_string(m) + "_seed" + std::to_string(seed) + "_" +
         system_name(with_cl, with_step1);
}

std::string baseline_cell_name(std::size_t m, std::uint64_t seed) {
  return "M" + std::to_string(m) + "_seed" + std::to_string(seed) + "_token_baseline";
}

std::unique_ptr<SentenceEncoder> make_encoder(const nlohmann::json& spec,
                                              const fs::path& base_dir) {
  if (spec.contains("checkpoint"))
    return load_checkpoint(resolve(base_dir, spec.at("checkpoint").get<std::string>()));
  const auto type = spec.value("type", std::string("toy"));
  if (type != "toy") throw ConfigError("unknown encoder type '" + type + "'");
  ToyEncoderConfig tc;
  tc.dim = spec.value("dim", tc.dim);
  tc.seed = spec.value("seed", tc.seed);
  tc.init_scale = spec.value("init_scale", tc.init_scale);
  tc.context_weight = spec.value("context_weight", tc.context_weight);
  tc.mask_token = spec.value("mask_token", tc.mask_token);
  return std::make_unique<ToyEncoder>(tc);
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  try {
    ExperimentConfig cfg;
    cfg.language = j.value("language", cfg.language);
    cfg.train_path = resolve(base_dir, j.at("train").get<std::string>());
    cfg.test_path = resolve(base_dir, j.at("test").get<std::string>());
    cfg.format = format_from_json(j.value("format", nlohmann::json::object()), cfg.language);
    cfg.sizes = j.value("sizes", cfg.sizes);
    cfg.seeds = j.value("seeds", cfg.seeds);
    if (cfg.sizes.empty() || cfg.seeds.empty()) throw ConfigError("sizes and seeds must be non-empty");
    for (auto m : cfg.sizes)
      if (m == 0) throw ConfigError("few-shot sizes must be positive");
    cfg.encoder = j.value("encoder", cfg.encoder);
    if (cfg.encoder.contains("checkpoint"))
      cfg.encoder["checkpoint"] =
          resolve(base_dir, cfg.encoder["checkpoint"].get<std::string>()).string();
    if (j.contains("stage1")) cfg.stage1 = stage1_config_from_json(j.at("stage1"));
    if (j.contains("stage2")) cfg.stage2 = stage2_config_from_json(j.at("stage2"));
    if (j.contains("pipeline")) cfg.pipeline = pipeline_config_from_json(j.at("pipeline"));
    if (j.contains("ablations")) {
      const auto& a = j.at("ablations");
      cfg.with_cl = a.value("with_cl", cfg.with_cl);
      cfg.with_step1 = a.value("with_step1", cfg.with_step1);
    }
    if (j.contains("baseline")) {
      const auto& b = j.at("baseline");
      cfg.run_baseline = b.value("enabled", true);
      cfg.baseline.schedule = schedule_from_json(b, cfg.baseline.schedule);
    }
    if (j.contains("transfer")) {
      const auto& t = j.at("transfer");
      cfg.transfer_corpus = resolve(base_dir, t.at("pre_corpus").get<std::string>());
      cfg.transfer_format = format_from_json(t.value("format", nlohmann::json::object()),
                                             t.value("language", std::string("en")));
    }
    cfg.export_projections = j.value("export_projections", cfg.export_projections);
    cfg.output_dir = resolve(base_dir, j.value("output_dir", std::string("report")));
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad experiment config: ") + e.what());
  }
}

ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                const std::function<void(const std::string&)>& progress) {
  auto say = [&](const std::string& msg) {
    if (progress) progress(msg);
  };
  Corpus train = read_bio_corpus(cfg.train_path.string(), Split::kTrain, cfg.format);
  Corpus test = read_bio_corpus(cfg.test_path.string(), Split::kTest, cfg.format);
  std::optional<Corpus> transfer;
  SlotOntology ontology = SlotOntology::merge(train.ontology, test.ontology);
  if (cfg.transfer_corpus) {
    transfer = read_bio_corpus(cfg.transfer_corpus->string(), Split::kTrain, cfg.transfer_format);
    ontology = SlotOntology::merge(ontology, transfer->ontology);
  }
  train.ontology = ontology;
  test.ontology = ontology;

  // A toy encoder without a pinned seed is re-initialized for every replicate seed.
  const bool reseed = !cfg.encoder.contains("checkpoint") && !cfg.encoder.contains("seed");
  std::shared_ptr<SentenceEncoder> fixed_base;
  if (!reseed) fixed_base = make_encoder(cfg.encoder);
  const auto gold = gold_labels(test);
  fs::create_directories(cfg.output_dir);

  ExperimentReport report;
  auto finish = [&](const std::string& cell, nlohmann::json metrics, double seconds) {
    const fs::path dir = cfg.output_dir / cell;
    fs::create_directories(dir);
    write_json(dir / "metrics.json", metrics);
    write_json(dir / "timing.json", {{"wall_seconds", seconds}});
    report.cells.push_back({cell, std::move(metrics), false});
  };
  auto evaluate = [&](const SentenceEncoder& enc, const TrainedStage2& s2, const fs::path& dir) {
    PipelineConfig pcfg = cfg.pipeline;
    pcfg.use_step1_filter = s2.has_step1;
    const auto preds = predict_corpus(enc, s2.has_step1 ? &s2.step1 : nullptr, s2.step2, test, pcfg);
    std::vector<std::vector<std::string>> labels;
    std::vector<nlohmann::json> rows;
    std::size_t invocations = 0, spans = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      labels.push_back(preds[i].labels);
      rows.push_back(prediction_to_json(test.utterances[i], preds[i]));
      invocations += preds[i].step2_invocations;
      spans += preds[i].span_count;
    }
    fs::create_directories(dir);
    write_jsonl(dir / "predictions.jsonl", rows);
    auto m = f1_metrics(token_micro_f1(gold, labels));
    m["step2_invocations"] = invocations;
    m["span_count"] = spans;
    return m;
  };

  for (auto m : cfg.sizes) {
    for (auto seed : cfg.seeds) {
      std::shared_ptr<SentenceEncoder> base = fixed_base;
      if (reseed) {
        auto spec = cfg.encoder;
        spec["seed"] = seed;
        base = make_encoder(spec);
      }
      std::optional<Corpus> sample;
      auto get_sample = [&]() -> const Corpus& {
        if (!sample) sample = sample_few_shot(train, m, seed);
        return *sample;
      };
      const nlohmann::json common = {{"language", cfg.language}, {"M", m}, {"seed", seed}};

      if (cfg.run_baseline) {
        const auto cell = baseline_cell_name(m, seed);
        if (auto done = load_completed(cfg.output_dir / cell)) {
          report.cells.push_back({cell, *done, true});
        } else {
          say("running " + cell);
          const auto start = Clock::now();
          nlohmann::json metrics = common;
          metrics["cell"] = cell;
          metrics["system"] = "token_baseline";
          try {
            const auto* tok = dynamic_cast<const TokenEncoder*>(base.get());
            if (!tok) throw ConfigError("token baseline needs an encoder with token outputs");
            TokenBaselineConfig bcfg = cfg.baseline;
            bcfg.seed = seed;
            std::vector<nlohmann::json> log;
            const auto model = train_token_baseline(*tok, get_sample(), bcfg, [&](const TokenEpochLog& e) {
              log.push_back({{"phase", "target/token"},
                             {"epoch", e.epoch},
                             {"mean_loss", e.mean_loss},
                             {"accuracy", e.token_accuracy}});
            });
            std::vector<std::vector<std::string>> labels;
            std::vector<nlohmann::json> rows;
            for (const auto& u : test.utterances) {
              labels.push_back(predict_tags(model, u));
              rows.push_back({{"id", u.id}, {"tokens", u.tokens}, {"predicted_labels", labels.back()},
                              {"spans", nlohmann::json::array()}, {"step2_invocations", 0}});
            }
            fs::create_directories(cfg.output_dir / cell);
            write_jsonl(cfg.output_dir / cell / "predictions.jsonl", rows);
            write_jsonl(cfg.output_dir / cell / "log.jsonl", log);
            metrics.update(f1_metrics(token_micro_f1(gold, labels)));
            metrics["status"] = "ok";
          } catch (const std::exception& e) {
            metrics["status"] = "failed";
            metrics["error"] = e.what();
          }
          finish(cell, std::move(metrics), seconds_since(start));
        }
      }

      for (bool with_cl : cfg.with_cl) {
        std::vector<bool> pending;
        for (bool with_step1 : cfg.with_step1) {
          const auto cell = cell_name(m, seed, with_cl, with_step1);
          if (auto done = load_completed(cfg.output_dir / cell)) {
            report.cells.push_back({cell, *done, true});
          } else {
            pending.push_back(with_step1);
          }
        }
        if (pending.empty()) continue;

        const auto start = Clock::now();
        std::vector<nlohmann::json> stage1_log;
        nlohmann::json shared = common;
        shared["with_cl"] = with_cl;
        std::shared_ptr<const SentenceEncoder> encoder = base;
        std::string stage1_error;
        try {
          if (with_cl) {
            const auto* trainable = dynamic_cast<const TrainableEncoder*>(base.get());
            if (!trainable) throw ConfigError("contrastive stage needs a trainable encoder");
            std::shared_ptr<TrainableEncoder> tuned = trainable->clone();
            Stage1Config s1 = cfg.stage1;
            s1.seed = seed;
            std::vector<std::pair<std::string, const Corpus*>> phases;
            if (transfer) phases.emplace_back("transfer", &*transfer);
            phases.emplace_back("target", &get_sample());
            for (const auto& [phase, corpus] : phases) {
              say("stage 1 (" + phase + ") for M=" + std::to_string(m) + " seed=" + std::to_string(seed));
              const auto triples = make_corpus_triples(*corpus, TripleMode::kAllSpans,
                                                       cfg.pipeline.max_span, cfg.pipeline.mask_token)
                                       .triples;
              const auto pairs = build_stage1_pairs(triples, s1);
              stage1_log.push_back({{"phase", phase + "/pairs"},
                                    {"pairs", pairs.pairs.size()},
                                    {"warnings", pairs.warnings.size()}});
              const auto r = train_stage1(*tuned, triples, pairs.pairs, s1, [&](const Stage1EpochLog& e) {
                auto j = to_json(e);
                j["phase"] = phase + "/stage1";
                stage1_log.push_back(j);
              });
              for (const auto& w : r.warnings) stage1_log.push_back({{"phase", phase + "/stage1"}, {"warning", w}});
            }
            const auto [before_x, labels] = gold_span_points(*base, test, cfg.pipeline);
            const auto [after_x, labels_after] = gold_span_points(*tuned, test, cfg.pipeline);
            std::set<std::string> distinct(labels.begin(), labels.end());
            if (distinct.size() >= 2) {
              shared["silhouette_before"] = silhouette_score(before_x, labels);
              shared["silhouette_after"] = silhouette_score(after_x, labels);
            }
            if (cfg.export_projections && !labels.empty()) {
              const auto tag = "M" + std::to_string(m) + "_seed" + std::to_string(seed);
              export_projection(before_x, labels, pca_projection, seed,
                                cfg.output_dir / "projection" / (tag + "_before.csv"));
              export_projection(after_x, labels, pca_projection, seed,
                                cfg.output_dir / "projection" / (tag + "_after.csv"));
            }
            encoder = tuned;
          }
        } catch (const std::exception& e) {
          stage1_error = e.what();
        }

        for (bool with_step1 : pending) {
          const auto cell = cell_name(m, seed, with_cl, with_step1);
          say("running " + cell);
          nlohmann::json metrics = shared;
          metrics["cell"] = cell;
          metrics["system"] = system_name(with_cl, with_step1);
          metrics["with_step1"] = with_step1;
          std::vector<nlohmann::json> log = stage1_log;
          try {
            if (!stage1_error.empty()) throw TrainingError(stage1_error);
            const auto s2 = train_stage2(*encoder, get_sample(), transfer ? &*transfer : nullptr,
                                         ontology, with_step1, cfg, seed, log);
            metrics.update(evaluate(s2.tuned_encoder ? *s2.tuned_encoder : *encoder, s2,
                                    cfg.output_dir / cell));
            metrics["status"] = "ok";
          } catch (const std::exception& e) {
            metrics["status"] = "failed";
            metrics["error"] = e.what();
          }
          fs::create_directories(cfg.output_dir / cell);
          write_jsonl(cfg.output_dir / cell / "log.jsonl", log);
          finish(cell, std::move(metrics), seconds_since(start));
        }
      }
    }
  }

  report.summary = summarize(cfg, report.cells, cfg.output_dir / "summary.csv");
  write_json(cfg.output_dir / "summary.json", report.summary);
  return report;
}

nlohmann::json to_json(const BenchReport& report) {
  nlohmann::json langs = nlohmann::json::array();
  for (const auto& l : report.languages)
    langs.push_back({{"language", l.language},
                     {"utterances", l.utterances},
                     {"step2_invocations_with_filter", l.step2_invocations_with_filter},
                     {"step2_invocations_without_filter", l.step2_invocations_without_filter},
                     {"wall_time_with", l.wall_time_with},
                     {"wall_time_without", l.wall_time_without},
                     {"f1_with", l.f1_with},
                     {"f1_without", l.f1_without},
                     {"count_violations", l.count_violations}});
  return {{"languages", langs}};
}

BenchReport bench_filtering(const SentenceEncoder& encoder, const SpanClassifier& step1,
                            const SpanClassifier& step2_with, const SpanClassifier& step2_without,
                            const Corpus& test, const PipelineConfig& cfg) {
  PipelineConfig on = cfg;
  on.use_step1_filter = true;
  PipelineConfig off = cfg;
  off.use_step1_filter = false;

  std::map<std::string, std::vector<std::size_t>> by_language;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& lang = test.utterances[i].language;
    by_language[lang.empty() ? "unk" : lang].push_back(i);
  }
  BenchReport report;
  for (const auto& [lang, idx] : by_language) {
    LanguageBench b;
    b.language = lang;
    b.utterances = idx.size();
    std::vector<std::vector<std::string>> gold, pred_on, pred_off;
    for (auto i : idx) {
      const auto& u = test.utterances[i];
      gold.push_back(u.labels);
      auto t0 = Clock::now();
      const auto with = predict_utterance(encoder, &step1, step2_with, u, on);
      b.wall_time_with += seconds_since(t0);
      t0 = Clock::now();
      const auto without = predict_utterance(encoder, nullptr, step2_without, u, off);
      b.wall_time_without += seconds_since(t0);
      b.step2_invocations_with_filter += with.step2_invocations;
      b.step2_invocations_without_filter += without.step2_invocations;
      b.count_violations += with.step2_invocations > without.step2_invocations;
      pred_on.push_back(with.labels);
      pred_off.push_back(without.labels);
    }
    b.f1_with = token_micro_f1(gold, pred_on).f1;
    b.f1_without = token_micro_f1(gold, pred_off).f1;
    report.languages.push_back(b);
  }
  return report;
}

Eigen::MatrixXd pca_projection(const Eigen::MatrixXd& points, std::uint64_t /*seed*/) {
  if (points.rows() < 2) throw ArgumentError("projection needs at least 2 points");
  const Eigen::RowVectorXd mean = points.colwise().mean();
  const Eigen::MatrixXd centered = points.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / double(points.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::Index d = cov.cols();
  Eigen::MatrixXd basis(d, 2);
  for (int k = 0; k < 2; ++k) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
    if (d > k) v = eig.eigenvectors().col(d - 1 - k);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    basis.col(k) = v;
  }
  return centered * basis;
}

void export_projection(const Eigen::MatrixXd& vectors, const std::vector<std::string>& labels,
                       const Projector& projector, std::uint64_t seed, const fs::path& path) {
  if (vectors.rows() < 2) throw ArgumentError("projection needs at least 2 points");
  if (labels.size() != static_cast<std::size_t>(vectors.rows()))
    throw ArgumentError("projection: label count does not match points");
  const Eigen::MatrixXd xy = projector(vectors, seed);
  if (xy.rows() != vectors.rows() || xy.cols() != 2)
    throw Error("projector returned a matrix of the wrong shape");
  std::ostringstream out;
  out.precision(17);
  out << "x,y,label\n";
  for (Eigen::Index r = 0; r < xy.rows(); ++r) {
    std::string label = labels[r];
    if (label.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : label) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
      label = quoted + "\"";
    }
    out << xy(r, 0) << ',' << xy(r, 1) << ',' << label << '\n';
  }
  write_file_atomic(path, out.str());
}

}  // namespace twosl
