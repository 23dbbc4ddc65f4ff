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

#include "twosl/token_baseline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "twosl/error.hpp"

namespace twosl {
namespace {

Eigen::MatrixXd head_logits(const TokenTaggerModel& m, const Eigen::MatrixXd& reps) {
  Eigen::MatrixXd z = reps * m.head_weights.transpose();
  z.rowwise() += m.head_bias.transpose();
  return z;
}

Eigen::MatrixXd token_reps(const TokenEncoder& enc, const Utterance& u) {
  Eigen::MatrixXd reps = enc.encode_tokens(u.tokens);
  if (static_cast<std::size_t>(reps.rows()) != u.size()) {
    const std::size_t missing = std::min<std::size_t>(reps.rows(), u.size());
    throw Error("token alignment failed for utterance " + u.id + " at token " +
                std::to_string(missing) + " ('" +
                (missing < u.size() ? u.tokens[missing] : std::string()) + "')");
  }
  return reps;
}

}  // namespace

TokenTagset::TokenTagset(const SlotOntology& ontology) {
  tags_.push_back("O");
  for (const auto& t : ontology.slot_types()) {
    tags_.push_back("B-" + t);
    tags_.push_back("I-" + t);
  }
}

std::size_t TokenTagset::index_of(const std::string& tag) const {
  auto it = std::find(tags_.begin(), tags_.end(), tag);
  if (it == tags_.end()) throw ArgumentError("tag '" + tag + "' is not in the tagset");
  return static_cast<std::size_t>(it - tags_.begin());
}

TokenTaggerModel train_token_baseline(const TokenEncoder& encoder, const Corpus& corpus,
                                      const TokenBaselineConfig& cfg,
                                      const std::function<void(const TokenEpochLog&)>& on_epoch) {
  if (corpus.size() == 0) throw ArgumentError("token baseline needs a non-empty corpus");
  if (cfg.schedule.batch_size == 0) throw ArgumentError("batch size must be positive");
  auto owned = encoder.clone();
  auto* token_enc = dynamic_cast<TokenEncoder*>(owned.get());
  if (!token_enc) throw ConfigError("encoder clone lost its per-token interface");
  owned.release();

  TokenTaggerModel model{std::shared_ptr<TokenEncoder>(token_enc), TokenTagset(corpus.ontology),
                         {}, {}};
  const std::size_t tags = model.tagset.size();
  const std::size_t dim = encoder.dim();
  std::mt19937_64 rng(cfg.seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  std::uniform_real_distribution<double> uniform(-bound, bound);
  model.head_weights.resize(tags, dim);
  for (Eigen::Index c = 0; c < model.head_weights.cols(); ++c)
    for (Eigen::Index r = 0; r < model.head_weights.rows(); ++r)
      model.head_weights(r, c) = uniform(rng);
  model.head_bias.resize(tags);
  for (Eigen::Index r = 0; r < model.head_bias.size(); ++r) model.head_bias(r) = uniform(rng);

  std::vector<std::vector<std::size_t>> gold(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i)
    for (const auto& l : corpus.utterances[i].labels) gold[i].push_back(model.tagset.index_of(l));

  AdamSettings opt;
  opt.learning_rate = cfg.schedule.learning_rate;
  opt.weight_decay = cfg.schedule.weight_decay;
  AdamState w_state, b_state;

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < cfg.schedule.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t token_total = 0, correct = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.schedule.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.schedule.batch_size);
      std::size_t batch_tokens = 0;
      for (std::size_t k = begin; k < end; ++k) batch_tokens += corpus.utterances[order[k]].size();
      const double inv = 1.0 / static_cast<double>(batch_tokens);

      Eigen::MatrixXd grad_w = Eigen::MatrixXd::Zero(tags, dim);
      Eigen::VectorXd grad_b = Eigen::VectorXd::Zero(tags);
      token_enc->zero_grad();
      for (std::size_t k = begin; k < end; ++k) {
        const auto& u = corpus.utterances[order[k]];
        const auto& y = gold[order[k]];
        const Eigen::MatrixXd reps = token_reps(*token_enc, u);
        const Eigen::MatrixXd z = head_logits(model, reps);
        Eigen::MatrixXd delta = softmax_rows(z);
        for (std::size_t i = 0; i < u.size(); ++i) {
          const auto r = static_cast<Eigen::Index>(i);
          const double mx = z.row(r).maxCoeff();
          loss_sum += mx + std::log((z.row(r).array() - mx).exp().sum()) -
                      z(r, static_cast<Eigen::Index>(y[i]));
          Eigen::Index arg = 0;
          z.row(r).maxCoeff(&arg);
          correct += static_cast<std::size_t>(arg) == y[i];
          delta(r, static_cast<Eigen::Index>(y[i])) -= 1.0;
        }
        delta *= inv;
        grad_w += delta.transpose() * reps;
        grad_b += delta.colwise().sum().transpose();
        token_enc->backward_tokens(u.tokens, delta * model.head_weights);
      }
      token_total += batch_tokens;
      if (!std::isfinite(loss_sum))
        throw TrainingError("token baseline: non-finite loss at epoch " + std::to_string(epoch));
      w_state.update({model.head_weights.data(), static_cast<std::size_t>(model.head_weights.size())},
                     {grad_w.data(), static_cast<std::size_t>(grad_w.size())}, opt);
      b_state.update({model.head_bias.data(), static_cast<std::size_t>(model.head_bias.size())},
                     {grad_b.data(), static_cast<std::size_t>(grad_b.size())}, opt);
      token_enc->step(opt);
    }
    TokenEpochLog log{epoch, loss_sum / static_cast<double>(token_total),
                      static_cast<double>(correct) / static_cast<double>(token_total)};
    if (on_epoch) on_epoch(log);
  }
  return model;
}

std::vector<std::string> predict_raw_tags(const TokenTaggerModel& model,
                                          const Utterance& utterance) {
  const Eigen::MatrixXd z = head_logits(model, token_reps(*model.encoder, utterance));
  std::vector<std::string> out;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    Eigen::Index arg = 0;
    for (Eigen::Index c = 1; c < z.cols(); ++c)
      if (z(r, c) > z(r, arg)) arg = c;
    out.push_back(model.tagset.tag(static_cast<std::size_t>(arg)));
  }
  return out;
}

std::vector<std::string> predict_tags(const TokenTaggerModel& model, const Utterance& utterance) {
  return repair_bio(predict_raw_tags(model, utterance));
}

std::vector<std::string> repair_bio(std::vector<std::string> labels) {
  std::string open;  // type of the current run, empty outside runs
  for (auto& l : labels) {
    const auto tag = parse_tag(l);
    if (!tag || tag->kind == BioTag::Kind::kOutside) {
      open.clear();
      continue;
    }
    if (tag->kind == BioTag::Kind::kInside && tag->type != open) l = "B-" + tag->type;
    open = tag->type;
  }
  return labels;
}

}  // namespace twosl
