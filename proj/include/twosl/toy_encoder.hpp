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

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "twosl/encoder.hpp"

namespace twosl {

struct ToyEncoderConfig {
  std::size_t dim = 32;
  std::uint64_t seed = 0;
  // Standard deviation of the initial embeddings is init_scale / sqrt(dim).
  double init_scale = 1.0;
  // Token representations add this fraction of each neighbour's embedding.
  double context_weight = 0.5;
  std::string mask_token = "[MASK]";
};

// Word-embedding lookup with mean pooling over whitespace tokens.
//
// The vocabulary is open: a word that has never been updated maps to a
// pseudo-random vector derived from (word, seed), so encoding is a pure
// function and checkpoints only store rows that training has touched. The
// mask token is an ordinary row of the table.
class ToyEncoder final : public TokenEncoder {
 public:
  explicit ToyEncoder(ToyEncoderConfig config = {});
  ToyEncoder(const ToyEncoder&) = delete;
  ToyEncoder& operator=(const ToyEncoder&) = delete;

  static std::unique_ptr<ToyEncoder> from_checkpoint(const nlohmann::json& config,
                                                     std::string_view blob);

  std::string kind() const override { return "toy"; }
  std::string name() const override;
  std::size_t dim() const override { return config_.dim; }
  nlohmann::json config() const override;
  std::string serialize_parameters() const override;

  void zero_grad() override;
  void backward(const std::string& text, std::span<const double> grad_output) override;
  void step(const AdamSettings& settings) override;
  std::vector<ParamBlock> parameters() override;
  std::unique_ptr<TrainableEncoder> clone() const override;

  Eigen::MatrixXd encode_tokens(const std::vector<std::string>& tokens) const override;
  void backward_tokens(const std::vector<std::string>& tokens,
                       const Eigen::MatrixXd& grad_output) override;

  // Current embedding of `word` (stored row or its deterministic init).
  Eigen::VectorXd embedding(const std::string& word) const;
  std::size_t stored_rows() const { return rows_.size(); }

 protected:
  Eigen::VectorXd encode_one(const std::string& text) const override;

 private:
  struct Row {
    std::vector<double> value;
    std::vector<double> grad;
    AdamState adam;
    bool touched = false;
  };

  std::vector<double> initial_row(const std::string& word) const;
  Row& materialize(const std::string& word);
  void accumulate(const std::string& word, const double* grad, double scale);

  ToyEncoderConfig config_;
  std::map<std::string, Row> rows_;
  std::vector<Row*> touched_;
};

}  // namespace twosl
