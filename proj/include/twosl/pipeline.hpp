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

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "twosl/corpus.hpp"
#include "twosl/encoder.hpp"
#include "twosl/span_classifier.hpp"
#include "twosl/span_transform.hpp"

namespace twosl {

struct SlotPrediction {
  Span span;
  std::string slot_type;
  double confidence = 0.0;
  // Passed the Step 1 filter, or the filter was disabled.
  bool filtered_in = true;
  std::size_t class_index = 0;
};

enum class OverlapPolicy { kConfidenceGreedy };

struct PipelineConfig {
  bool use_step1_filter = true;
  std::size_t max_span = kDefaultMaxSpan;
  std::string mask_token = kDefaultMaskToken;
  OverlapPolicy overlap_policy = OverlapPolicy::kConfidenceGreedy;
  std::size_t batch_size = 64;
  double threshold = 0.5;
};

nlohmann::json to_json(const PipelineConfig& cfg);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

struct SpanPredictions {
  // Non-NONE Step 2 outputs, in span enumeration order.
  std::vector<SlotPrediction> predictions;
  // Spans handed to Step 2.
  std::vector<Span> step2_spans;
  std::size_t span_count = 0;

  std::size_t step2_invocations() const { return step2_spans.size(); }
};

// Enumerate -> (filter) -> classify. `step1` may be null when the filter is
// disabled.
SpanPredictions predict_spans(const SentenceEncoder& encoder, const SpanClassifier* step1,
                              const SpanClassifier& step2, const Utterance& utterance,
                              const PipelineConfig& cfg);

// Greedy by descending confidence; ties prefer the earlier start, then the
// shorter span, then the lower class index. Returns the kept predictions
// ordered by start.
std::vector<SlotPrediction> resolve_overlaps(std::vector<SlotPrediction> predictions);

// B-<type> on the first token of each selection, I-<type> on the rest, O
// elsewhere. Throws ArgumentError on overlapping or out-of-range selections.
std::vector<std::string> reconstruct_bio(const Utterance& utterance,
                                         const std::vector<SlotPrediction>& selections);

struct UtterancePrediction {
  std::string id;
  std::vector<std::string> labels;
  std::vector<SlotPrediction> selected;
  std::size_t step2_invocations = 0;
  std::size_t span_count = 0;
};

UtterancePrediction predict_utterance(const SentenceEncoder& encoder,
                                      const SpanClassifier* step1, const SpanClassifier& step2,
                                      const Utterance& utterance, const PipelineConfig& cfg);

std::vector<UtterancePrediction> predict_corpus(const SentenceEncoder& encoder,
                                                const SpanClassifier* step1,
                                                const SpanClassifier& step2, const Corpus& corpus,
                                                const PipelineConfig& cfg);

// {id, tokens, predicted_labels, spans: [{start, length, type, confidence}],
//  step2_invocations}
nlohmann::json prediction_to_json(const Utterance& utterance, const UtterancePrediction& pred);

// Reads the JSON-lines prediction format back into (id, labels) records.
struct PredictedLabels {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<std::string> labels;
};
std::vector<PredictedLabels> read_predictions(std::istream& in);

}  // namespace twosl
