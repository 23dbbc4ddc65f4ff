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
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "twosl/corpus.hpp"
#include "twosl/encoder.hpp"
#include "twosl/mlp.hpp"

namespace twosl {

// {O} followed by B-<t>, I-<t> for every slot type t in ontology order.
class TokenTagset {
 public:
  explicit TokenTagset(const SlotOntology& ontology);

  std::size_t size() const { return tags_.size(); }
  const std::string& tag(std::size_t i) const { return tags_[i]; }
  std::size_t index_of(const std::string& tag) const;
  const std::vector<std::string>& tags() const { return tags_; }

 private:
  std::vector<std::string> tags_;
};

struct TokenBaselineConfig {
  TrainSchedule schedule{50, 32, 1e-5, 0.01};
  std::uint64_t seed = 0;
};

// Linear tagging head over a fine-tuned token encoder.
struct TokenTaggerModel {
  std::shared_ptr<TokenEncoder> encoder;
  TokenTagset tagset;
  Eigen::MatrixXd head_weights;  // tags x D
  Eigen::VectorXd head_bias;
};

struct TokenEpochLog {
  std::size_t epoch;
  double mean_loss;
  double token_accuracy;
};

// Fine-tunes a copy of `encoder` together with a freshly initialised head
// using Adam with L2 weight decay; batches are groups of utterances.
TokenTaggerModel train_token_baseline(const TokenEncoder& encoder, const Corpus& corpus,
                                      const TokenBaselineConfig& cfg,
                                      const std::function<void(const TokenEpochLog&)>& on_epoch = {});

// Per-token argmax, no repair.
std::vector<std::string> predict_raw_tags(const TokenTaggerModel& model,
                                          const Utterance& utterance);

// Argmax followed by repair_bio.
std::vector<std::string> predict_tags(const TokenTaggerModel& model, const Utterance& utterance);

// Rewrites every I-x that does not continue an x run into B-x.
std::vector<std::string> repair_bio(std::vector<std::string> labels);

}  // namespace twosl
