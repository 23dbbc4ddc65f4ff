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
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "twosl/optim.hpp"

namespace twosl {

struct MLPArchitecture {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t output_dim = 0;

  // input, hidden..., output
  std::vector<std::size_t> layer_dims() const;
  friend bool operator==(const MLPArchitecture&, const MLPArchitecture&) = default;
};

struct TrainSchedule {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 1e-5;
  double weight_decay = 0.0;
};

nlohmann::json to_json(const TrainSchedule& s);
TrainSchedule schedule_from_json(const nlohmann::json& j, TrainSchedule defaults);

// Examples as rows of `x`, class indices in `y`.
struct LabeledVectors {
  Eigen::MatrixXd x;
  std::vector<std::size_t> y;
  std::size_t num_classes = 0;

  std::size_t size() const { return y.size(); }
};

// Fully connected network, ReLU on hidden layers, linear output scores.
class MLPModel {
 public:
  MLPModel() = default;
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
  MLPModel(MLPArchitecture arch, std::uint64_t seed);

  const MLPArchitecture& architecture() const { return arch_; }
  std::size_t input_dim() const { return arch_.input_dim; }
  std::size_t output_dim() const { return arch_.output_dim; }

  // Rows of `x` are examples; returns one row of scores per example.
  Eigen::MatrixXd logits(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd probabilities(const Eigen::MatrixXd& x) const;

  // Mean softmax cross-entropy over the rows of `x`. When `grads` is
  // non-null it receives dLoss/dW and dLoss/db for every layer, and dLoss/dx
  // with rows aligned to `x`.
  struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    Eigen::MatrixXd input;
  };
  double loss(const Eigen::MatrixXd& x, const std::vector<std::size_t>& y,
              Gradients* grads = nullptr) const;

  // weights[l] is (out x in).
  std::vector<Eigen::MatrixXd>& weights() { return weights_; }
  std::vector<Eigen::VectorXd>& biases() { return biases_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  const std::vector<Eigen::VectorXd>& biases() const { return biases_; }

  std::string serialize() const;
  static MLPModel deserialize(std::string_view blob);

  friend bool operator==(const MLPModel& a, const MLPModel& b);

 private:
  MLPArchitecture arch_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

// Row-wise numerically stable softmax.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores);

struct MLPEpochLog {
  std::size_t epoch;
  double mean_loss;
  double accuracy;
};

struct MLPTrainResult {
  MLPModel model;
  std::vector<MLPEpochLog> curve;
  std::vector<std::string> warnings;
};

// Minibatch Adam on softmax cross-entropy for a fixed number of epochs; the
// final-epoch model is returned. Batch order is shuffled with `seed`.
MLPTrainResult train_mlp(const LabeledVectors& data, const MLPArchitecture& arch,
                         const TrainSchedule& schedule, std::uint64_t seed,
                         const std::function<void(const MLPEpochLog&)>& on_epoch = {});

// Further epochs starting from `model` (used for two-phase transfer runs).
MLPTrainResult continue_training(MLPModel model, const LabeledVectors& data,
                                 const TrainSchedule& schedule, std::uint64_t seed,
                                 const std::function<void(const MLPEpochLog&)>& on_epoch = {});

}  // namespace twosl
