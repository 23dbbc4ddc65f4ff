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

#include "twosl/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <random>
#include <set>

#include "twosl/error.hpp"

namespace twosl {
namespace {

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(std::string_view blob, std::size_t& pos) {
  if (pos + sizeof(T) > blob.size()) throw IntegrityError("MLP blob is truncated");
  T value;
  std::memcpy(&value, blob.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, const std::vector<std::size_t>& idx,
                            std::size_t begin, std::size_t end) {
  Eigen::MatrixXd out(end - begin, x.cols());
  for (std::size_t i = begin; i < end; ++i) out.row(i - begin) = x.row(idx[i]);
  return out;
}

}  // namespace

std::vector<std::size_t> MLPArchitecture::layer_dims() const {
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(output_dim);
  return dims;
}

nlohmann::json to_json(const TrainSchedule& s) {
  return {{"epochs", s.epochs},
          {"batch_size", s.batch_size},
          {"learning_rate", s.learning_rate},
          {"weight_decay", s.weight_decay}};
}

TrainSchedule schedule_from_json(const nlohmann::json& j, TrainSchedule d) {
  d.epochs = j.value("epochs", d.epochs);
  d.batch_size = j.value("batch_size", d.batch_size);
  d.learning_rate = j.value("learning_rate", d.learning_rate);
  d.weight_decay = j.value("weight_decay", d.weight_decay);
  if (d.batch_size == 0) throw ConfigError("batch_size must be positive");
  return d;
}

MLPModel::MLPModel(MLPArchitecture arch, std::uint64_t seed) : arch_(std::move(arch)) {
  if (arch_.input_dim == 0 || arch_.output_dim == 0)
    throw ArgumentError("MLP input and output dims must be positive");
  const auto dims = arch_.layer_dims();
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (dims[l + 1] == 0) throw ArgumentError("MLP layer of width 0");
    const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
    std::uniform_real_distribution<double> uniform(-bound, bound);
    Eigen::MatrixXd w(dims[l + 1], dims[l]);
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = uniform(rng);
    Eigen::VectorXd b(dims[l + 1]);
    for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = uniform(rng);
    weights_.push_back(std::move(w));
    biases_.push_back(std::move(b));
  }
}

Eigen::MatrixXd MLPModel::logits(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.cols()) != arch_.input_dim)
    throw ArgumentError("MLP input has dim " + std::to_string(x.cols()) + ", expected " +
                        std::to_string(arch_.input_dim));
  Eigen::MatrixXd a = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Eigen::MatrixXd z = a * weights_[l].transpose();
    z.rowwise() += biases_[l].transpose();
    if (l + 1 < weights_.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& scores) {
  Eigen::MatrixXd out = scores;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double mx = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - mx).exp();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

Eigen::MatrixXd MLPModel::probabilities(const Eigen::MatrixXd& x) const {
  return softmax_rows(logits(x));
}

double MLPModel::loss(const Eigen::MatrixXd& x, const std::vector<std::size_t>& y,
                      Gradients* grads) const {
  if (static_cast<std::size_t>(x.rows()) != y.size())
    throw ArgumentError("MLP loss: row/label count mismatch");
  if (static_cast<std::size_t>(x.cols()) != arch_.input_dim)
    throw ArgumentError("MLP loss: input dim mismatch");
  const std::size_t layers = weights_.size();
  const auto n = static_cast<double>(y.size());

  std::vector<Eigen::MatrixXd> acts{x};  // acts[l] = input of layer l
  Eigen::MatrixXd z;
  for (std::size_t l = 0; l < layers; ++l) {
    z = acts.back() * weights_[l].transpose();
    z.rowwise() += biases_[l].transpose();
    if (l + 1 < layers) acts.push_back(z.cwiseMax(0.0));
  }
  Eigen::MatrixXd probs = softmax_rows(z);
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] >= arch_.output_dim) throw ArgumentError("MLP loss: label out of range");
    const auto r = static_cast<Eigen::Index>(i);
    const double mx = z.row(r).maxCoeff();
    const double lse = mx + std::log((z.row(r).array() - mx).exp().sum());
    total += lse - z(r, static_cast<Eigen::Index>(y[i]));
  }
  if (!grads) return total / n;

  grads->weights.resize(layers);
  grads->biases.resize(layers);
  Eigen::MatrixXd delta = probs;
  for (std::size_t i = 0; i < y.size(); ++i)
    delta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(y[i])) -= 1.0;
  delta /= n;
  for (std::size_t l = layers; l-- > 0;) {
    grads->weights[l] = delta.transpose() * acts[l];
    grads->biases[l] = delta.colwise().sum().transpose();
    Eigen::MatrixXd back = delta * weights_[l];
    if (l == 0) {
      grads->input = std::move(back);
      break;
    }
    delta = (acts[l].array() > 0.0).select(back.array(), 0.0).matrix();
  }
  return total / n;
}

std::string MLPModel::serialize() const {
  std::string out;
  const auto dims = arch_.layer_dims();
  put<std::uint64_t>(out, dims.size());
  for (auto d : dims) put<std::uint64_t>(out, d);
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto& w = weights_[l];
    out.append(reinterpret_cast<const char*>(w.data()), sizeof(double) * w.size());
    const auto& b = biases_[l];
    out.append(reinterpret_cast<const char*>(b.data()), sizeof(double) * b.size());
  }
  return out;
}

MLPModel MLPModel::deserialize(std::string_view blob) {
  std::size_t pos = 0;
  const auto count = take<std::uint64_t>(blob, pos);
  if (count < 2 || count > 64) throw IntegrityError("MLP blob has a bad layer count");
  std::vector<std::size_t> dims;
  for (std::uint64_t i = 0; i < count; ++i) dims.push_back(take<std::uint64_t>(blob, pos));
  MLPModel m;
  m.arch_.input_dim = dims.front();
  m.arch_.output_dim = dims.back();
  m.arch_.hidden.assign(dims.begin() + 1, dims.end() - 1);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Eigen::MatrixXd w(dims[l + 1], dims[l]);
    Eigen::VectorXd b(dims[l + 1]);
    const std::size_t need = sizeof(double) * (w.size() + b.size());
    if (pos + need > blob.size()) throw IntegrityError("MLP blob is truncated");
    std::memcpy(w.data(), blob.data() + pos, sizeof(double) * w.size());
    pos += sizeof(double) * w.size();
    std::memcpy(b.data(), blob.data() + pos, sizeof(double) * b.size());
    pos += sizeof(double) * b.size();
    m.weights_.push_back(std::move(w));
    m.biases_.push_back(std::move(b));
  }
  if (pos != blob.size()) throw IntegrityError("trailing bytes in MLP blob");
  return m;
}

bool operator==(const MLPModel& a, const MLPModel& b) {
  if (!(a.arch_ == b.arch_) || a.weights_.size() != b.weights_.size()) return false;
  for (std::size_t l = 0; l < a.weights_.size(); ++l) {
    if (a.weights_[l] != b.weights_[l] || a.biases_[l] != b.biases_[l]) return false;
  }
  return true;
}

MLPTrainResult continue_training(MLPModel model, const LabeledVectors& data,
                                 const TrainSchedule& schedule, std::uint64_t seed,
                                 const std::function<void(const MLPEpochLog&)>& on_epoch) {
  if (data.size() == 0) throw ArgumentError("cannot train an MLP on an empty dataset");
  if (static_cast<std::size_t>(data.x.rows()) != data.size())
    throw ArgumentError("dataset row/label count mismatch");
  if (schedule.batch_size == 0) throw ArgumentError("batch size must be positive");
  MLPTrainResult result;
  const std::set<std::size_t> present(data.y.begin(), data.y.end());
  if (present.size() == 1)
    result.warnings.push_back("single-class training set: classifier is constant");

  AdamSettings opt;
  opt.learning_rate = schedule.learning_rate;
  opt.weight_decay = schedule.weight_decay;
  const std::size_t layers = model.weights().size();
  std::vector<AdamState> w_state(layers), b_state(layers);

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  MLPModel::Gradients grads;
  for (std::size_t epoch = 0; epoch < schedule.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += schedule.batch_size) {
      const std::size_t end = std::min(order.size(), begin + schedule.batch_size);
      const Eigen::MatrixXd xb = gather_rows(data.x, order, begin, end);
      std::vector<std::size_t> yb;
      for (std::size_t i = begin; i < end; ++i) yb.push_back(data.y[order[i]]);
      const double loss = model.loss(xb, yb, &grads);
      if (!std::isfinite(loss))
        throw TrainingError("MLP: non-finite loss at epoch " + std::to_string(epoch));
      loss_sum += loss * static_cast<double>(end - begin);
      for (std::size_t l = 0; l < layers; ++l) {
        auto& w = model.weights()[l];
        auto& b = model.biases()[l];
        w_state[l].update({w.data(), static_cast<std::size_t>(w.size())},
                          {grads.weights[l].data(), static_cast<std::size_t>(w.size())}, opt);
        b_state[l].update({b.data(), static_cast<std::size_t>(b.size())},
                          {grads.biases[l].data(), static_cast<std::size_t>(b.size())}, opt);
      }
    }
    // Training accuracy of the end-of-epoch model.
    const Eigen::MatrixXd scores = model.logits(data.x);
    for (std::size_t i = 0; i < data.size(); ++i) {
      Eigen::Index arg = 0;
      scores.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
      correct += static_cast<std::size_t>(arg) == data.y[i];
    }
    MLPEpochLog log{epoch, loss_sum / static_cast<double>(data.size()),
                    static_cast<double>(correct) / static_cast<double>(data.size())};
    if (on_epoch) on_epoch(log);
    result.curve.push_back(log);
  }
  result.model = std::move(model);
  return result;
}

MLPTrainResult train_mlp(const LabeledVectors& data, const MLPArchitecture& arch,
                         const TrainSchedule& schedule, std::uint64_t seed,
                         const std::function<void(const MLPEpochLog&)>& on_epoch) {
  if (arch.input_dim != static_cast<std::size_t>(data.x.cols()))
    throw ArgumentError("MLP input dim does not match dataset");
  if (data.num_classes > arch.output_dim)
    throw ArgumentError("MLP output dim is smaller than the number of classes");
  // Separate streams for initialization and shuffling.
  return continue_training(MLPModel(arch, seed), data, schedule,
                           seed ^ 0xa5a5a5a55a5a5a5aULL, on_epoch);
}

}  // namespace twosl
