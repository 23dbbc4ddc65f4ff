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
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "twosl/optim.hpp"

namespace twosl {

// Mutable view of one parameter tensor and its accumulated gradient.
struct ParamBlock {
  std::string name;
  std::span<double> values;
  std::span<double> grads;
};

// Text -> R^D. Read-only encoding is safe from concurrent callers.
class SentenceEncoder {
 public:
  virtual ~SentenceEncoder() = default;

  // Backend identifier used to pick a loader for checkpoints.
  virtual std::string kind() const = 0;
  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual bool trainable() const { return false; }

  // One row per text, in input order. Rejects empty batches and empty texts.
  Eigen::MatrixXd encode_batch(const std::vector<std::string>& texts) const;
  Eigen::VectorXd encode(const std::string& text) const;

  // Backend configuration written to the checkpoint manifest.
  virtual nlohmann::json config() const = 0;
  // Opaque parameter blob.
  virtual std::string serialize_parameters() const = 0;

 protected:
  virtual Eigen::VectorXd encode_one(const std::string& text) const = 0;
  // Default loops over encode_one; batching backends override.
  virtual Eigen::MatrixXd do_encode_batch(const std::vector<std::string>& texts) const;
};

// An encoder whose parameters can be fine-tuned by backpropagation.
class TrainableEncoder : public SentenceEncoder {
 public:
  bool trainable() const override { return true; }

  virtual void zero_grad() = 0;
  // Accumulates dL/dtheta given dL/d(encode(text)).
  virtual void backward(const std::string& text,
                        std::span<const double> grad_output) = 0;
  // Applies accumulated gradients, then clears them.
  virtual void step(const AdamSettings& settings) = 0;
  virtual std::vector<ParamBlock> parameters() = 0;
  virtual std::unique_ptr<TrainableEncoder> clone() const = 0;
};

// Exposes one representation per whitespace token, for token tagging.
class TokenEncoder : public TrainableEncoder {
 public:
  // n x D, row i aligned to tokens[i].
  virtual Eigen::MatrixXd encode_tokens(const std::vector<std::string>& tokens) const = 0;
  virtual void backward_tokens(const std::vector<std::string>& tokens,
                               const Eigen::MatrixXd& grad_output) = 0;
};

using EncoderHandle = std::shared_ptr<SentenceEncoder>;

// Builds an encoder of some backend from manifest config and parameter blob.
using EncoderLoader = std::function<std::unique_ptr<SentenceEncoder>(
    const nlohmann::json& config, std::string_view blob)>;

// Registers a backend for load_checkpoint. The "toy" backend is built in.
void register_encoder_backend(const std::string& kind, EncoderLoader loader);

// Writes <dir>/manifest.json and <dir>/params.bin; returns the manifest.
nlohmann::json save_checkpoint(const SentenceEncoder& encoder,
                               const std::filesystem::path& dir);
std::unique_ptr<SentenceEncoder> load_checkpoint(const std::filesystem::path& dir);

// Splits on runs of ASCII whitespace.
std::vector<std::string> whitespace_tokens(std::string_view text);

}  // namespace twosl
