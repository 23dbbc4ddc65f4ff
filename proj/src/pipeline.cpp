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

#include "twosl/pipeline.hpp"

#include <algorithm>
#include <istream>
#include <tuple>

#include "twosl/contrastive.hpp"
#include "twosl/error.hpp"

namespace twosl {

nlohmann::json to_json(const PipelineConfig& cfg) {
  return {{"use_step1_filter", cfg.use_step1_filter},
          {"max_span", cfg.max_span},
          {"mask_token", cfg.mask_token},
          {"overlap_policy", "confidence_greedy"},
          {"batch_size", cfg.batch_size},
          {"threshold", cfg.threshold}};
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  PipelineConfig cfg;
  cfg.use_step1_filter = j.value("use_step1_filter", cfg.use_step1_filter);
  cfg.max_span = j.value("max_span", cfg.max_span);
  cfg.mask_token = j.value("mask_token", cfg.mask_token);
  if (j.value("overlap_policy", std::string("confidence_greedy")) != "confidence_greedy")
    throw ConfigError("unknown overlap policy");
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.threshold = j.value("threshold", cfg.threshold);
  if (cfg.max_span == 0) throw ConfigError("max_span must be positive");
  return cfg;
}

SpanPredictions predict_spans(const SentenceEncoder& encoder, const SpanClassifier* step1,
                              const SpanClassifier& step2, const Utterance& utterance,
                              const PipelineConfig& cfg) {
  const std::size_t expected = 2 * encoder.dim();
  if (step2.model.input_dim() != expected)
    throw ConfigError("step 2 classifier expects dim " + std::to_string(step2.model.input_dim()) +
                      ", encoder produces " + std::to_string(expected));
  if (cfg.use_step1_filter) {
    if (!step1) throw ConfigError("filtering enabled but no step 1 classifier given");
    if (step1->model.input_dim() != expected)
      throw ConfigError("step 1 classifier expects dim " +
                        std::to_string(step1->model.input_dim()) + ", encoder produces " +
                        std::to_string(expected));
  }

  SpanPredictions out;
  const auto spans = enumerate_spans(utterance, cfg.max_span);
  out.span_count = spans.size();
  std::vector<SpanTriple> triples;
  triples.reserve(spans.size());
  for (const auto& s : spans) triples.push_back(make_triple(utterance, s, {}, cfg.mask_token));
  const Eigen::MatrixXd vecs = encode_pair_items(encoder, triples, cfg.batch_size);

  std::vector<Eigen::Index> survivors;
  if (cfg.use_step1_filter) {
    const auto decisions = predict_binary_batch(*step1, vecs, cfg.threshold);
    for (std::size_t i = 0; i < decisions.size(); ++i)
      if (decisions[i].is_slot) survivors.push_back(static_cast<Eigen::Index>(i));
  } else {
    for (std::size_t i = 0; i < spans.size(); ++i) survivors.push_back(static_cast<Eigen::Index>(i));
  }
  if (survivors.empty()) return out;

  Eigen::MatrixXd kept(survivors.size(), vecs.cols());
  for (std::size_t k = 0; k < survivors.size(); ++k) {
    kept.row(k) = vecs.row(survivors[k]);
    out.step2_spans.push_back(spans[survivors[k]]);
  }
  const auto types = predict_slot_type_batch(step2, kept);
  for (std::size_t k = 0; k < types.size(); ++k) {
    if (!types[k].label) continue;
    out.predictions.push_back({spans[survivors[k]], *types[k].label, types[k].confidence, true,
                               types[k].class_index});
  }
  return out;
}

std::vector<SlotPrediction> resolve_overlaps(std::vector<SlotPrediction> predictions) {
  std::stable_sort(predictions.begin(), predictions.end(),
                   [](const SlotPrediction& a, const SlotPrediction& b) {
                     if (a.confidence != b.confidence) return a.confidence > b.confidence;
                     return std::tie(a.span.start, a.span.length, a.class_index) <
                            std::tie(b.span.start, b.span.length, b.class_index);
                   });
  std::vector<SlotPrediction> kept;
  for (auto& p : predictions) {
    const bool clash = std::any_of(kept.begin(), kept.end(),
                                   [&](const SlotPrediction& k) { return k.span.overlaps(p.span); });
    if (!clash) kept.push_back(std::move(p));
  }
  std::sort(kept.begin(), kept.end(), [](const SlotPrediction& a, const SlotPrediction& b) {
    return a.span.start < b.span.start;
  });
  return kept;
}

std::vector<std::string> reconstruct_bio(const Utterance& utterance,
                                         const std::vector<SlotPrediction>& selections) {
  std::vector<std::string> labels(utterance.size(), "O");
  std::vector<bool> used(utterance.size(), false);
  for (const auto& s : selections) {
    if (s.span.length == 0 || s.span.end() > utterance.size())
      throw ArgumentError("selection out of range for utterance " + utterance.id);
    for (std::size_t i = s.span.start; i < s.span.end(); ++i) {
      if (used[i])
        throw ArgumentError("overlapping selections at position " + std::to_string(i) +
                            " of utterance " + utterance.id + "; resolve overlaps first");
      used[i] = true;
      labels[i] = (i == s.span.start ? "B-" : "I-") + s.slot_type;
    }
  }
  return labels;
}

UtterancePrediction predict_utterance(const SentenceEncoder& encoder,
                                      const SpanClassifier* step1, const SpanClassifier& step2,
                                      const Utterance& utterance, const PipelineConfig& cfg) {
  auto spans = predict_spans(encoder, step1, step2, utterance, cfg);
  UtterancePrediction out;
  out.id = utterance.id;
  out.step2_invocations = spans.step2_invocations();
  out.span_count = spans.span_count;
  out.selected = resolve_overlaps(std::move(spans.predictions));
  out.labels = reconstruct_bio(utterance, out.selected);
  return out;
}

std::vector<UtterancePrediction> predict_corpus(const SentenceEncoder& encoder,
                                                const SpanClassifier* step1,
                                                const SpanClassifier& step2, const Corpus& corpus,
                                                const PipelineConfig& cfg) {
  std::vector<UtterancePrediction> out;
  out.reserve(corpus.size());
  for (const auto& u : corpus.utterances)
    out.push_back(predict_utterance(encoder, step1, step2, u, cfg));
  return out;
}

nlohmann::json prediction_to_json(const Utterance& utterance, const UtterancePrediction& pred) {
  nlohmann::json spans = nlohmann::json::array();
  for (const auto& s : pred.selected)
    spans.push_back({{"start", s.span.start},
                     {"length", s.span.length},
                     {"type", s.slot_type},
                     {"confidence", s.confidence}});
  return {{"id", utterance.id},
          {"tokens", utterance.tokens},
          {"predicted_labels", pred.labels},
          {"spans", spans},
          {"step2_invocations", pred.step2_invocations}};
}

std::vector<PredictedLabels> read_predictions(std::istream& in) {
  std::vector<PredictedLabels> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("id").get<std::string>(),
                     j.value("tokens", std::vector<std::string>{}),
                     j.at("predicted_labels").get<std::vector<std::string>>()});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, std::string("bad prediction record: ") + e.what());
    }
  }
  return out;
}

}  // namespace twosl
