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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "twosl/encoder.hpp"
#include "twosl/span_transform.hpp"

namespace twosl {

enum class Polarity { kPositive, kNegative };

// A "pair of pairs": two triples, referenced by index into the triple list
// the pair set was built from.
struct CLPair {
  std::size_t left = 0;
  std::size_t right = 0;
  Polarity polarity = Polarity::kPositive;

  friend bool operator==(const CLPair&, const CLPair&) = default;
};

struct SamplingWarning {
  std::size_t anchor;  // triple index
  std::string message;
};

struct PairSet {
  std::vector<CLPair> pairs;
  std::vector<SamplingWarning> warnings;
};

// Checks the polarity invariants: positives share a non-NONE label, negatives
// differ in label and are not both NONE, and no pair is a self-pair.
bool is_valid_pair(std::span<const SpanTriple> triples, const CLPair& pair);

// Every unordered pair {i < j} with equal non-NONE labels, ordered by (i, j).
std::vector<CLPair> build_positive_pairs(std::span<const SpanTriple> triples);

// For each positive (p_i, p_j): K negatives anchored at p_i and K at p_j.
// Draws for one anchor are without replacement while enough eligible
// partners exist.
PairSet sample_negative_pairs(std::span<const SpanTriple> triples,
                              std::span<const CLPair> positives, std::size_t k,
                              std::uint64_t seed);

// 1:1 regime: one member of each positive pair is picked at random and gets a
// single negative. Returns positives followed by negatives.
PairSet sample_one_to_one_pairs(std::span<const SpanTriple> triples,
                                std::uint64_t seed);

double cosine_distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                       const Eigen::Ref<const Eigen::VectorXd>& b);

// Margin-gated contrastive loss on one pair distance: positives with d > m
// cost d^2, negatives with d < m cost (m - d)^2, everything else is free.
double contrastive_loss(double distance, Polarity polarity, double margin);

// concat(encode(masked_text), encode(span_text)), length 2D.
Eigen::VectorXd encode_pair_item(const SentenceEncoder& encoder,
                                 const SpanTriple& triple);
// One 2D-row per triple, encoded in chunks of `batch_size` texts.
Eigen::MatrixXd encode_pair_items(const SentenceEncoder& encoder,
                                  std::span<const SpanTriple> triples,
                                  std::size_t batch_size = 64);

struct CLBatchLossReport {
  double total_loss = 0.0;
  std::size_t hard_positive_count = 0;
  std::size_t hard_negative_count = 0;
  std::size_t pair_count = 0;
};

enum class NegativeRegime { kPerAnchorK, kOneToOne };

enum class HardGate {
  kAbsoluteMargin,
  // Experimental: hardness relative to the batch (positives farther than the
  // closest negative, negatives closer than the farthest positive).
  kBatchRelative,
};

struct Stage1Config {
  double margin = 0.5;
  std::size_t negatives_per_anchor = 1;  // K
  NegativeRegime regime = NegativeRegime::kPerAnchorK;
  HardGate gate = HardGate::kAbsoluteMargin;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 2e-5;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
  AdamSettings optimizer() const;
};

nlohmann::json to_json(const Stage1Config& cfg);
Stage1Config stage1_config_from_json(const nlohmann::json& j);

// Positives plus negatives according to cfg.regime.
PairSet build_stage1_pairs(std::span<const SpanTriple> triples, const Stage1Config& cfg);

// Mean contrastive loss over the hard pairs of `batch` (0 if none). With
// `accumulate_gradients`, dLoss/dtheta is added to the encoder's gradients.
CLBatchLossReport contrastive_batch_loss(TrainableEncoder& encoder,
                                         std::span<const SpanTriple> triples,
                                         std::span<const CLPair> batch,
                                         const Stage1Config& cfg,
                                         bool accumulate_gradients);

struct Stage1EpochLog {
  std::size_t epoch;
  double mean_loss;
  std::size_t hard_pos;
  std::size_t hard_neg;
};

struct Stage1Report {
  std::vector<Stage1EpochLog> epochs;
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const Stage1EpochLog& log);

// Fine-tunes `encoder` in place on fixed pairs. Pairs are shuffled each epoch
// (seeded) and one optimizer step is taken per batch with at least one hard
// pair. Throws TrainingError on a non-finite loss.
Stage1Report train_stage1(TrainableEncoder& encoder,
                          std::span<const SpanTriple> triples,
                          std::span<const CLPair> pairs, const Stage1Config& cfg,
                          const std::function<void(const Stage1EpochLog&)>& on_epoch = {});

// {left_ref, right_ref, polarity}, refs as {source_id, start, length}.
nlohmann::json pair_to_json(std::span<const SpanTriple> triples, const CLPair& pair);

}  // namespace twosl
