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
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "twosl/corpus.hpp"
#include "twosl/encoder.hpp"
#include "twosl/mlp.hpp"
#include "twosl/span_transform.hpp"

namespace twosl {

struct Stage2Config {
  std::vector<std::size_t> step1_hidden{2500, 1500};
  std::vector<std::size_t> step2_hidden{3600, 2400, 800};
  TrainSchedule step1{30, 32, 1e-5, 0.0};
  TrainSchedule step2{100, 32, 1e-5, 0.0};
  double threshold = 0.5;
  // Step 2 also learns a NONE class (for inference without the filter).
  bool include_none_class = false;
  // Keep at most this many NONE spans per sentence when building training
  // sets; 0 keeps all of them.
  std::size_t max_none_per_sentence = 0;
  std::size_t encode_batch_size = 64;
  std::uint64_t seed = 0;
  // Experimental: Step 2 back-propagates into a copy of the encoder instead
  // of training on frozen vectors. Off by default.
  bool fine_tune_encoder = false;

  void validate() const;
};

nlohmann::json to_json(const Stage2Config& cfg);
Stage2Config stage2_config_from_json(const nlohmann::json& j);

enum class ClassifierRole { kBinaryFilter, kSlotType };

// An MLP plus what it needs to be wired into the pipeline: its role, the
// class-index map (slot types in ontology order, NONE last when present) and
// the encoder it was trained on.
struct SpanClassifier {
  ClassifierRole role = ClassifierRole::kSlotType;
  MLPModel model;
  std::vector<SlotLabel> class_map;
  std::string encoder_name;
  std::size_t encoder_dim = 0;
};

struct Step2Dataset {
  LabeledVectors data;
  std::vector<SlotLabel> class_map;
};

// Seeded per-sentence cap on NONE triples; `cap == 0` returns the input.
std::vector<SpanTriple> cap_none_triples(std::span<const SpanTriple> triples,
                                         std::size_t cap, std::uint64_t seed);

// 1 for triples carrying a slot type, 0 for NONE. Throws if there is no 1.
LabeledVectors build_step1_training_set(std::span<const SpanTriple> triples,
                                        const SentenceEncoder& encoder,
                                        std::size_t batch_size = 64);

// include_none=false keeps only labelled triples; include_none=true keeps all
// and appends NONE as the last class.
Step2Dataset build_step2_training_set(std::span<const SpanTriple> triples,
                                      const SentenceEncoder& encoder,
                                      const SlotOntology& ontology, bool include_none,
                                      std::size_t batch_size = 64);

struct ClassifierTrainResult {
  SpanClassifier classifier;
  std::vector<MLPEpochLog> curve;
  std::vector<std::string> warnings;
};

ClassifierTrainResult train_step1(const LabeledVectors& data, const SentenceEncoder& encoder,
                                  const Stage2Config& cfg,
                                  const std::function<void(const MLPEpochLog&)>& on_epoch = {});
ClassifierTrainResult train_step2(const Step2Dataset& data, const SentenceEncoder& encoder,
                                  const Stage2Config& cfg,
                                  const std::function<void(const MLPEpochLog&)>& on_epoch = {});

// Experimental joint training: the Step 2 MLP and `encoder` are updated
// together, re-encoding each batch so the classification loss reaches the
// encoder parameters. The encoder uses the Step 2 schedule's optimiser
// settings with decoupled weight decay. A non-null `init` is trained further
// instead of a freshly initialised MLP.
ClassifierTrainResult train_step2_end_to_end(
    std::span<const SpanTriple> triples, TrainableEncoder& encoder, const SlotOntology& ontology,
    bool include_none, const Stage2Config& cfg,
    const std::function<void(const MLPEpochLog&)>& on_epoch = {},
    const MLPModel* init = nullptr);

struct BinaryDecision {
  bool is_slot = false;
  double score = 0.0;  // probability of the slot class
};

struct TypeDecision {
  SlotLabel label;
  double confidence = 0.0;
  std::size_t class_index = 0;
};

// is_slot iff P(slot) >= threshold.
BinaryDecision predict_binary(const SpanClassifier& filter, const Eigen::VectorXd& vec,
                              double threshold);
std::vector<BinaryDecision> predict_binary_batch(const SpanClassifier& filter,
                                                 const Eigen::MatrixXd& vecs, double threshold);

// Argmax of the class scores; ties go to the lowest class index.
TypeDecision predict_slot_type(const SpanClassifier& classifier, const Eigen::VectorXd& vec);
std::vector<TypeDecision> predict_slot_type_batch(const SpanClassifier& classifier,
                                                  const Eigen::MatrixXd& vecs);

// Directory with manifest.json {role, arch, class_map, encoder_name, D,
// content_hash} and params.bin.
void save_classifier(const SpanClassifier& classifier, const std::filesystem::path& dir);
SpanClassifier load_classifier(const std::filesystem::path& dir);

}  // namespace twosl
