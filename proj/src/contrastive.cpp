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

#include "twosl/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include "twosl/error.hpp"

namespace twosl {
namespace {

// Triples grouped by label, used to draw a uniform partner among all triples
// whose label differs from the anchor's.
class NegativeSampler {
 public:
  explicit NegativeSampler(std::span<const SpanTriple> triples) {
    for (std::size_t i = 0; i < triples.size(); ++i) groups_[triples[i].label].push_back(i);
  }

  std::vector<const std::vector<std::size_t>*> eligible_groups(const SlotLabel& anchor) const {
    std::vector<const std::vector<std::size_t>*> out;
    for (const auto& [label, members] : groups_) {
      if (label == anchor) continue;
      if (!label && !anchor) continue;
      out.push_back(&members);
    }
    return out;
  }

  // Up to k partners for `anchor`; distinct while the pool allows.
  std::vector<std::size_t> draw(const SlotLabel& anchor, std::size_t k,
                                std::mt19937_64& rng) const {
    const auto groups = eligible_groups(anchor);
    std::size_t total = 0;
    for (const auto* g : groups) total += g->size();
    std::vector<std::size_t> picked;
    if (total == 0) return picked;

    auto at = [&](std::size_t r) {
      for (const auto* g : groups) {
        if (r < g->size()) return (*g)[r];
        r -= g->size();
      }
      return groups.back()->back();
    };
    std::uniform_int_distribution<std::size_t> uniform(0, total - 1);
    std::set<std::size_t> seen;
    const std::size_t distinct = std::min(k, total);
    while (picked.size() < distinct) {
      const std::size_t r = uniform(rng);
      if (seen.insert(r).second) picked.push_back(at(r));
    }
    while (picked.size() < k) picked.push_back(at(uniform(rng)));
    return picked;
  }

 private:
  std::map<SlotLabel, std::vector<std::size_t>> groups_;
};

void add_negatives(const NegativeSampler& sampler, std::span<const SpanTriple> triples,
                   std::size_t anchor, std::size_t k, std::mt19937_64& rng,
                   PairSet& out) {
  const auto partners = sampler.draw(triples[anchor].label, k, rng);
  if (partners.size() < k)
    out.warnings.push_back({anchor, "anchor " + triples[anchor].source_id + "/" +
                                        label_name(triples[anchor].label) +
                                        " has no eligible negative partner"});
  for (auto p : partners) out.pairs.push_back({anchor, p, Polarity::kNegative});
}

// Gradient of cosine_distance(u, v) with respect to u.
Eigen::VectorXd cosine_distance_grad(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return Eigen::VectorXd::Zero(u.size());
  const double cos = u.dot(v) / (nu * nv);
  return -(v / (nu * nv) - cos * u / (nu * nu));
}

double loss_grad(double d, Polarity polarity, double margin) {
  return polarity == Polarity::kPositive ? 2.0 * d : -2.0 * (margin - d);
}

nlohmann::json triple_ref(const SpanTriple& t) {
  return {{"source_id", t.source_id}, {"start", t.span.start}, {"length", t.span.length}};
}

}  // namespace

bool is_valid_pair(std::span<const SpanTriple> triples, const CLPair& pair) {
  if (pair.left >= triples.size() || pair.right >= triples.size()) return false;
  if (pair.left == pair.right) return false;
  const auto& a = triples[pair.left].label;
  const auto& b = triples[pair.right].label;
  if (pair.polarity == Polarity::kPositive) return a && a == b;
  return a != b && (a || b);
}

std::vector<CLPair> build_positive_pairs(std::span<const SpanTriple> triples) {
  std::map<std::string, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < triples.size(); ++i)
    if (triples[i].label) by_label[*triples[i].label].push_back(i);
  std::vector<CLPair> out;
  for (const auto& [label, members] : by_label)
    for (std::size_t a = 0; a < members.size(); ++a)
      for (std::size_t b = a + 1; b < members.size(); ++b)
        out.push_back({members[a], members[b], Polarity::kPositive});
  std::sort(out.begin(), out.end(), [](const CLPair& x, const CLPair& y) {
    return std::tie(x.left, x.right) < std::tie(y.left, y.right);
  });
  return out;
}

PairSet sample_negative_pairs(std::span<const SpanTriple> triples,
                              std::span<const CLPair> positives, std::size_t k,
                              std::uint64_t seed) {
  if (k == 0) throw ArgumentError("negatives per anchor (K) must be at least 1");
  NegativeSampler sampler(triples);
  std::mt19937_64 rng(seed);
  PairSet out;
  for (const auto& pos : positives) {
    add_negatives(sampler, triples, pos.left, k, rng, out);
    add_negatives(sampler, triples, pos.right, k, rng, out);
  }
  return out;
}

PairSet sample_one_to_one_pairs(std::span<const SpanTriple> triples, std::uint64_t seed) {
  NegativeSampler sampler(triples);
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  PairSet out;
  out.pairs = build_positive_pairs(triples);
  const std::size_t num_pos = out.pairs.size();
  for (std::size_t i = 0; i < num_pos; ++i) {
    const CLPair pos = out.pairs[i];
    add_negatives(sampler, triples, coin(rng) ? pos.left : pos.right, 1, rng, out);
  }
  return out;
}

double cosine_distance(const Eigen::Ref<const Eigen::VectorXd>& a,
                       const Eigen::Ref<const Eigen::VectorXd>& b) {
  const double denom = a.norm() * b.norm();
  if (denom == 0.0) return 1.0;
  return 1.0 - a.dot(b) / denom;
}

double contrastive_loss(double distance, Polarity polarity, double margin) {
  if (polarity == Polarity::kPositive) return distance > margin ? distance * distance : 0.0;
  return distance < margin ? (margin - distance) * (margin - distance) : 0.0;
}

Eigen::VectorXd encode_pair_item(const SentenceEncoder& encoder, const SpanTriple& triple) {
  const Eigen::MatrixXd enc = encoder.encode_batch({triple.masked_text, triple.span_text});
  Eigen::VectorXd out(2 * encoder.dim());
  out << enc.row(0).transpose(), enc.row(1).transpose();
  return out;
}

Eigen::MatrixXd encode_pair_items(const SentenceEncoder& encoder,
                                  std::span<const SpanTriple> triples,
                                  std::size_t batch_size) {
  const std::size_t dim = encoder.dim();
  Eigen::MatrixXd out(triples.size(), 2 * dim);
  batch_size = std::max<std::size_t>(batch_size, 1);
  for (std::size_t begin = 0; begin < triples.size(); begin += batch_size) {
    const std::size_t end = std::min(triples.size(), begin + batch_size);
    std::vector<std::string> masked, spans;
    for (std::size_t i = begin; i < end; ++i) {
      masked.push_back(triples[i].masked_text);
      spans.push_back(triples[i].span_text);
    }
    const auto n = static_cast<Eigen::Index>(end - begin);
    out.block(begin, 0, n, dim) = encoder.encode_batch(masked);
    out.block(begin, dim, n, dim) = encoder.encode_batch(spans);
  }
  return out;
}

void Stage1Config::validate() const {
  if (!(margin > 0.0)) throw ArgumentError("stage 1 margin must be positive");
  if (negatives_per_anchor == 0) throw ArgumentError("stage 1 K must be positive");
  if (batch_size == 0) throw ArgumentError("stage 1 batch size must be positive");
  if (!(learning_rate > 0.0)) throw ArgumentError("stage 1 learning rate must be positive");
}

AdamSettings Stage1Config::optimizer() const {
  AdamSettings s;
  s.learning_rate = learning_rate;
  s.weight_decay = weight_decay;
  s.decoupled_weight_decay = true;
  return s;
}

nlohmann::json to_json(const Stage1Config& cfg) {
  return {{"margin", cfg.margin},
          {"k", cfg.negatives_per_anchor},
          {"regime", cfg.regime == NegativeRegime::kOneToOne ? "one_to_one" : "per_anchor_k"},
          {"gate", cfg.gate == HardGate::kBatchRelative ? "batch_relative" : "absolute_margin"},
          {"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"learning_rate", cfg.learning_rate},
          {"weight_decay", cfg.weight_decay},
          {"seed", cfg.seed}};
}

Stage1Config stage1_config_from_json(const nlohmann::json& j) {
  Stage1Config cfg;
  cfg.margin = j.value("margin", cfg.margin);
  cfg.negatives_per_anchor = j.value("k", cfg.negatives_per_anchor);
  const auto regime = j.value("regime", std::string("per_anchor_k"));
  if (regime == "one_to_one") {
    cfg.regime = NegativeRegime::kOneToOne;
  } else if (regime != "per_anchor_k") {
    throw ConfigError("unknown stage 1 regime '" + regime + "'");
  }
  const auto gate = j.value("gate", std::string("absolute_margin"));
  if (gate == "batch_relative") {
    cfg.gate = HardGate::kBatchRelative;
  } else if (gate != "absolute_margin") {
    throw ConfigError("unknown stage 1 gate '" + gate + "'");
  }
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

PairSet build_stage1_pairs(std::span<const SpanTriple> triples, const Stage1Config& cfg) {
  cfg.validate();
  if (triples.empty()) throw ArgumentError("stage 1 needs at least one triple");
  if (cfg.regime == NegativeRegime::kOneToOne) return sample_one_to_one_pairs(triples, cfg.seed);
  PairSet out;
  out.pairs = build_positive_pairs(triples);
  auto negatives = sample_negative_pairs(triples, out.pairs, cfg.negatives_per_anchor, cfg.seed);
  out.pairs.insert(out.pairs.end(), negatives.pairs.begin(), negatives.pairs.end());
  out.warnings = std::move(negatives.warnings);
  return out;
}

CLBatchLossReport contrastive_batch_loss(TrainableEncoder& encoder,
                                         std::span<const SpanTriple> triples,
                                         std::span<const CLPair> batch,
                                         const Stage1Config& cfg,
                                         bool accumulate_gradients) {
  CLBatchLossReport report;
  report.pair_count = batch.size();
  if (batch.empty()) return report;
  const std::size_t dim = encoder.dim();

  // Encode each distinct triple of the batch once.
  std::unordered_map<std::size_t, Eigen::Index> row_of;
  std::vector<std::size_t> members;
  for (const auto& p : batch) {
    for (auto idx : {p.left, p.right}) {
      if (idx >= triples.size()) throw ArgumentError("pair refers to a missing triple");
      if (row_of.emplace(idx, static_cast<Eigen::Index>(members.size())).second)
        members.push_back(idx);
    }
  }
  std::vector<SpanTriple> unique;
  unique.reserve(members.size());
  for (auto idx : members) unique.push_back(triples[idx]);
  const Eigen::MatrixXd enc = encode_pair_items(encoder, unique, unique.size());

  std::vector<double> dist(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i)
    dist[i] = cosine_distance(enc.row(row_of[batch[i].left]).transpose(),
                              enc.row(row_of[batch[i].right]).transpose());

  // Thresholds deciding which pairs count as hard.
  double pos_threshold = cfg.margin;
  double neg_threshold = cfg.margin;
  if (cfg.gate == HardGate::kBatchRelative) {
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < batch.size(); ++i)
      (batch[i].polarity == Polarity::kPositive ? pos : neg).push_back(dist[i]);
    auto mean = [](const std::vector<double>& v) {
      return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    };
    pos_threshold = neg.size() > 1 ? *std::min_element(neg.begin(), neg.end()) : mean(pos);
    neg_threshold = pos.size() > 1 ? *std::max_element(pos.begin(), pos.end()) : mean(neg);
    neg_threshold = std::min(neg_threshold, cfg.margin);
  }

  std::vector<std::pair<std::size_t, double>> hard;  // (pair index, dLoss/dd)
  double sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double d = dist[i];
    if (batch[i].polarity == Polarity::kPositive) {
      if (d > pos_threshold && d > 0.0) {
        sum += d * d;
        ++report.hard_positive_count;
        hard.emplace_back(i, loss_grad(d, Polarity::kPositive, cfg.margin));
      }
    } else if (d < neg_threshold) {
      sum += (cfg.margin - d) * (cfg.margin - d);
      ++report.hard_negative_count;
      hard.emplace_back(i, loss_grad(d, Polarity::kNegative, cfg.margin));
    }
  }
  if (hard.empty()) return report;
  const double scale = 1.0 / static_cast<double>(hard.size());
  report.total_loss = sum * scale;
  if (!accumulate_gradients || !std::isfinite(report.total_loss)) return report;

  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(enc.rows(), enc.cols());
  for (const auto& [i, dloss] : hard) {
    const Eigen::Index l = row_of[batch[i].left];
    const Eigen::Index r = row_of[batch[i].right];
    const Eigen::VectorXd u = enc.row(l).transpose();
    const Eigen::VectorXd v = enc.row(r).transpose();
    grad.row(l) += (scale * dloss * cosine_distance_grad(u, v)).transpose();
    grad.row(r) += (scale * dloss * cosine_distance_grad(v, u)).transpose();
  }
  std::vector<double> g(dim);
  for (std::size_t k = 0; k < members.size(); ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    for (std::size_t c = 0; c < dim; ++c) g[c] = grad(row, c);
    encoder.backward(unique[k].masked_text, g);
    for (std::size_t c = 0; c < dim; ++c) g[c] = grad(row, dim + c);
    encoder.backward(unique[k].span_text, g);
  }
  return report;
}

nlohmann::json to_json(const Stage1EpochLog& log) {
  return {{"epoch", log.epoch},
          {"mean_loss", log.mean_loss},
          {"hard_pos", log.hard_pos},
          {"hard_neg", log.hard_neg}};
}

Stage1Report train_stage1(TrainableEncoder& encoder, std::span<const SpanTriple> triples,
                          std::span<const CLPair> pairs, const Stage1Config& cfg,
                          const std::function<void(const Stage1EpochLog&)>& on_epoch) {
  cfg.validate();
  if (pairs.empty()) throw ArgumentError("stage 1 needs at least one pair");
  Stage1Report report;
  const AdamSettings opt = cfg.optimizer();
  std::mt19937_64 rng(cfg.seed);
  std::vector<CLPair> order(pairs.begin(), pairs.end());

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    Stage1EpochLog log{epoch, 0.0, 0, 0};
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      encoder.zero_grad();
      const auto batch = contrastive_batch_loss(
          encoder, triples, std::span(order).subspan(begin, end - begin), cfg, true);
      if (!std::isfinite(batch.total_loss))
        throw TrainingError("stage 1: non-finite loss at epoch " + std::to_string(epoch) +
                            ", batch starting at pair " + std::to_string(begin) + " (" +
                            std::to_string(batch.hard_positive_count) + " hard positives, " +
                            std::to_string(batch.hard_negative_count) + " hard negatives)");
      if (batch.hard_positive_count + batch.hard_negative_count > 0) encoder.step(opt);
      log.mean_loss += batch.total_loss;
      log.hard_pos += batch.hard_positive_count;
      log.hard_neg += batch.hard_negative_count;
      ++batches;
    }
    encoder.zero_grad();
    log.mean_loss /= static_cast<double>(std::max<std::size_t>(batches, 1));
    if (log.hard_pos + log.hard_neg == 0)
      report.warnings.push_back("stage 1 epoch " + std::to_string(epoch) +
                                ": no hard pairs, encoder unchanged");
    if (on_epoch) on_epoch(log);
    report.epochs.push_back(log);
  }
  return report;
}

nlohmann::json pair_to_json(std::span<const SpanTriple> triples, const CLPair& pair) {
  return {{"left_ref", triple_ref(triples[pair.left])},
          {"right_ref", triple_ref(triples[pair.right])},
          {"polarity", pair.polarity == Polarity::kPositive ? "positive" : "negative"}};
}

}  // namespace twosl
