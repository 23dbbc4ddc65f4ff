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


#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "test_util.hpp"
#include "twosl/contrastive.hpp"
#include "twosl/error.hpp"
#include "twosl/synthetic.hpp"
#include "twosl/toy_encoder.hpp"

using namespace twosl;

namespace {

std::vector<SpanTriple> labelled(const std::vector<SlotLabel>& labels) {
  std::vector<SpanTriple> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    out.push_back({"masked " + std::to_string(i), "span" + std::to_string(i), labels[i],
                   "s" + std::to_string(i), {0, 1}});
  return out;
}

std::vector<SlotLabel> labels_of(const std::vector<SpanTriple>& triples) {
  std::vector<SlotLabel> out;
  for (const auto& t : triples) out.push_back(t.label);
  return out;
}

std::vector<SpanTriple> synthetic_triples(std::size_t n, std::uint64_t seed, TripleMode mode) {
  const auto s = generate_synthetic_corpus(n, 1, seed);
  return make_corpus_triples(s.train, mode).triples;
}

}  // namespace

TEST_SUITE("contrastive") {

TEST_CASE("positive pair examples") {
  const SlotLabel A("A"), B("B"), N;
  CHECK(build_positive_pairs(labelled({A, N, B, A, N, N})).size() == 1);
  CHECK(build_positive_pairs(labelled({N, N, N, N, N})).empty());
  CHECK(build_positive_pairs(labelled({A, A, A})).size() == 3);
}

TEST_CASE("pair counts agree with brute force on random corpora") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> n_utts(1, 20), n_types(1, 5), k_dist(1, 3);
  for (int trial = 0; trial < 100; ++trial) {
    const Corpus c = make_corpus(testutil::random_utterances(rng, n_utts(rng), 8, n_types(rng)),
                                 Split::kTrain);
    const auto triples = make_corpus_triples(c, TripleMode::kAllSpans, 3).triples;
    const auto labels = labels_of(triples);
    const auto pos = build_positive_pairs(triples);
    REQUIRE(pos.size() == oracle::positive_pairs(labels));
    for (const auto& p : pos) CHECK(is_valid_pair(triples, p));

    const std::size_t k = k_dist(rng);
    const auto neg = sample_negative_pairs(triples, pos, k, trial);
    bool full = true;
    for (const auto& p : pos)
      full = full && oracle::negative_partners(labels, p.left) > 0 &&
             oracle::negative_partners(labels, p.right) > 0;
    if (full) {
      CHECK(neg.pairs.size() == 2 * k * pos.size());
      CHECK(neg.warnings.empty());
    }
    for (const auto& p : neg.pairs) {
      CHECK(p.polarity == Polarity::kNegative);
      CHECK(is_valid_pair(triples, p));
    }
  }
}

TEST_CASE("negatives per anchor are distinct when the pool allows") {
  const auto triples = synthetic_triples(10, 3, TripleMode::kAllSpans);
  const auto pos = build_positive_pairs(triples);
  const std::size_t k = 3;
  const auto neg = sample_negative_pairs(triples, pos, k, 1);
  REQUIRE(neg.pairs.size() == 2 * k * pos.size());
  for (std::size_t i = 0; i < neg.pairs.size(); i += k) {
    std::set<std::size_t> partners;
    for (std::size_t j = 0; j < k; ++j) {
      CHECK(neg.pairs[i + j].left == neg.pairs[i].left);
      partners.insert(neg.pairs[i + j].right);
    }
    CHECK(partners.size() == k);
  }
}

TEST_CASE("ten positives with K=1 give twenty negatives") {
  const SlotLabel A("A"), B("B"), N;
  // C(5,2) = 10 positives among the A's.
  const auto triples = labelled({A, A, A, A, A, B, N});
  const auto pos = build_positive_pairs(triples);
  REQUIRE(pos.size() == 10);
  CHECK(sample_negative_pairs(triples, pos, 1, 0).pairs.size() == 20);
}

TEST_CASE("no label diversity means no negatives") {
  const SlotLabel A("A");
  const auto triples = labelled({A, A, A});
  const auto pos = build_positive_pairs(triples);
  const auto neg = sample_negative_pairs(triples, pos, 1, 0);
  CHECK(neg.pairs.empty());
  CHECK(neg.warnings.size() == 2 * pos.size());
  const auto one = sample_one_to_one_pairs(triples, 0);
  CHECK(one.pairs.size() == pos.size());
  CHECK_FALSE(one.warnings.empty());
  CHECK_THROWS_AS(sample_negative_pairs(triples, pos, 0, 0), ArgumentError);
}

TEST_CASE("one-to-one regime") {
  const auto triples = synthetic_triples(6, 8, TripleMode::kAllSpans);
  const auto pos = build_positive_pairs(triples);
  const auto set = sample_one_to_one_pairs(triples, 4);
  std::size_t npos = 0, nneg = 0;
  for (const auto& p : set.pairs) {
    CHECK(is_valid_pair(triples, p));
    (p.polarity == Polarity::kPositive ? npos : nneg)++;
  }
  CHECK(npos == pos.size());
  CHECK(nneg == pos.size());
  CHECK(sample_one_to_one_pairs(triples, 4).pairs == set.pairs);
}

TEST_CASE("sampling is deterministic for a seed") {
  const auto triples = synthetic_triples(8, 2, TripleMode::kAllSpans);
  const auto pos = build_positive_pairs(triples);
  CHECK(sample_negative_pairs(triples, pos, 1, 9).pairs ==
        sample_negative_pairs(triples, pos, 1, 9).pairs);
  CHECK(sample_negative_pairs(triples, pos, 1, 9).pairs !=
        sample_negative_pairs(triples, pos, 1, 10).pairs);
}

TEST_CASE("loss matches the closed form on the distance grid") {
  for (int i = 0; i <= 20; ++i) {
    const double d = 0.1 * i;
    for (double m : {0.5, 0.2, 1.0}) {
      CHECK(std::abs(contrastive_loss(d, Polarity::kPositive, m) - oracle::loss(d, true, m)) <= 1e-12);
      CHECK(std::abs(contrastive_loss(d, Polarity::kNegative, m) - oracle::loss(d, false, m)) <= 1e-12);
    }
  }
  CHECK(contrastive_loss(0.0, Polarity::kPositive, 0.5) == 0.0);
  CHECK(contrastive_loss(0.8, Polarity::kPositive, 0.5) == doctest::Approx(0.64).epsilon(1e-12));
  CHECK(contrastive_loss(0.3, Polarity::kNegative, 0.5) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(contrastive_loss(0.6, Polarity::kNegative, 0.5) == 0.0);
}

TEST_CASE("loss monotonicity") {
  double prev_pos = -1, prev_neg = 1e9;
  for (int i = 0; i <= 2000; ++i) {
    const double d = 0.001 * i;
    const double p = contrastive_loss(d, Polarity::kPositive, 0.5);
    const double n = contrastive_loss(d, Polarity::kNegative, 0.5);
    CHECK(p >= prev_pos);
    CHECK(n <= prev_neg);
    prev_pos = p;
    prev_neg = n;
  }
}

TEST_CASE("cosine distance") {
  Eigen::VectorXd a(2), b(2), c(2);
  a << 1, 0;
  b << 0, 3;
  c << -2, 0;
  CHECK(cosine_distance(a, a) == doctest::Approx(0.0));
  CHECK(cosine_distance(a, b) == doctest::Approx(1.0));
  CHECK(cosine_distance(a, c) == doctest::Approx(2.0));
}

TEST_CASE("pair items concatenate both encodings") {
  ToyEncoderConfig cfg;
  cfg.dim = 4;
  ToyEncoder enc(cfg);
  const SpanTriple t{"fly to [MASK]", "boston", SlotLabel("city"), "x", {2, 1}};
  const Eigen::VectorXd v = encode_pair_item(enc, t);
  REQUIRE(v.size() == 8);
  CHECK(v.head(4).isApprox(enc.encode("fly to [MASK]")));
  CHECK(v.tail(4).isApprox(enc.encode("boston")));
  CHECK(encode_pair_item(enc, t) == v);
  const std::vector<SpanTriple> ts{t, t};
  const Eigen::MatrixXd m = encode_pair_items(enc, ts, 1);
  CHECK(m.row(0).transpose() == v);
  CHECK(m.row(1).transpose() == v);
}

TEST_CASE("batch loss gradient matches finite differences") {
  ToyEncoderConfig ecfg;
  ecfg.dim = 6;
  ecfg.seed = 3;
  ToyEncoder enc(ecfg);
  const auto triples = synthetic_triples(4, 6, TripleMode::kAllSpans);
  Stage1Config cfg;
  cfg.seed = 2;
  const auto pairs = build_stage1_pairs(triples, cfg).pairs;
  const std::vector<CLPair> batch(pairs.begin(), pairs.begin() + std::min<std::size_t>(48, pairs.size()));

  enc.zero_grad();
  const auto report = contrastive_batch_loss(enc, triples, batch, cfg, true);
  REQUIRE(report.hard_positive_count + report.hard_negative_count > 0);

  auto f = [&] { return contrastive_batch_loss(enc, triples, batch, cfg, false).total_loss; };
  std::vector<std::pair<double*, double>> coords;
  for (auto& block : enc.parameters())
    for (std::size_t i = 0; i < block.values.size(); ++i)
      if (std::abs(block.grads[i]) > 1e-6) coords.emplace_back(&block.values[i], block.grads[i]);
  REQUIRE(coords.size() >= 20);

  std::mt19937_64 rng(1);
  std::shuffle(coords.begin(), coords.end(), rng);
  for (std::size_t c = 0; c < 20; ++c) {
    const double numeric = oracle::central_difference(f, *coords[c].first, 1e-6);
    const double analytic = coords[c].second;
    const double rel = std::abs(numeric - analytic) / std::max(std::abs(numeric), std::abs(analytic));
    CHECK(rel < 1e-4);
  }
}

TEST_CASE("zero epochs leave the encoder unchanged") {
  ToyEncoder enc;
  const auto triples = synthetic_triples(5, 1, TripleMode::kAllSpans);
  Stage1Config cfg;
  cfg.epochs = 0;
  const auto pairs = build_stage1_pairs(triples, cfg).pairs;
  const std::string before = enc.serialize_parameters();
  train_stage1(enc, triples, pairs, cfg);
  CHECK(enc.serialize_parameters() == before);
}

TEST_CASE("training pulls same-label spans together on held-out triples") {
  ToyEncoderConfig ecfg;
  ecfg.seed = 4;
  ToyEncoder enc(ecfg);
  const auto s = generate_synthetic_corpus(60, 40, 12);
  const auto train = make_corpus_triples(s.train, TripleMode::kAllSpans).triples;
  const auto held = make_corpus_triples(s.test, TripleMode::kGoldOnly).triples;

  auto intra = [&] {
    const Eigen::MatrixXd x = encode_pair_items(enc, held);
    double sum = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < held.size(); ++i)
      for (std::size_t j = i + 1; j < held.size(); ++j)
        if (held[i].label == held[j].label) {
          sum += cosine_distance(x.row(i).transpose(), x.row(j).transpose());
          ++n;
        }
    return sum / n;
  };

  Stage1Config cfg;
  cfg.learning_rate = 0.01;
  cfg.epochs = 3;
  cfg.seed = 5;
  const double before = intra();
  const auto pairs = build_stage1_pairs(train, cfg).pairs;
  std::vector<Stage1EpochLog> logs;
  train_stage1(enc, train, pairs, cfg, [&](const Stage1EpochLog& e) { logs.push_back(e); });
  CHECK(logs.size() == 3);
  CHECK(intra() < before);
}

TEST_CASE("stage 1 is deterministic") {
  const auto triples = synthetic_triples(12, 4, TripleMode::kAllSpans);
  Stage1Config cfg;
  cfg.learning_rate = 0.01;
  cfg.epochs = 2;
  cfg.seed = 7;
  const auto pairs = build_stage1_pairs(triples, cfg).pairs;
  ToyEncoder a, b;
  train_stage1(a, triples, pairs, cfg);
  train_stage1(b, triples, pairs, cfg);
  CHECK(a.serialize_parameters() == b.serialize_parameters());
}

TEST_CASE("config json") {
  Stage1Config cfg;
  cfg.regime = NegativeRegime::kOneToOne;
  cfg.negatives_per_anchor = 3;
  cfg.seed = 12;
  const auto back = stage1_config_from_json(to_json(cfg));
  CHECK(back.regime == NegativeRegime::kOneToOne);
  CHECK(back.negatives_per_anchor == 3);
  CHECK(back.seed == 12);
  CHECK(cfg.optimizer().decoupled_weight_decay);
  CHECK_THROWS_AS(stage1_config_from_json({{"regime", "bogus"}}), ConfigError);
}

}  // TEST_SUITE
