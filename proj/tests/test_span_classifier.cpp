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
#include <filesystem>

#include "oracles.hpp"
#include "test_util.hpp"
#include "twosl/contrastive.hpp"
#include "twosl/error.hpp"
#include "twosl/span_classifier.hpp"
#include "twosl/synthetic.hpp"
#include "twosl/toy_encoder.hpp"

using namespace twosl;
using testutil::utt;

namespace {

// Input-independent classifier whose class probabilities are `probs`.
SpanClassifier constant_classifier(ClassifierRole role, std::size_t dim,
                                   const std::vector<double>& probs,
                                   std::vector<SlotLabel> class_map = {}) {
  MLPModel m({2 * dim, {}, probs.size()}, 0);
  m.weights()[0].setZero();
  for (std::size_t i = 0; i < probs.size(); ++i) m.biases()[0](i) = std::log(probs[i]);
  if (class_map.empty()) class_map.resize(probs.size());
  return {role, m, class_map, "test", dim};
}

}  // namespace

TEST_SUITE("span_classifier") {

TEST_CASE("step 1 set for one gold span in four tokens") {
  ToyEncoderConfig cfg;
  cfg.dim = 4;
  ToyEncoder enc(cfg);
  const auto triples =
      make_triples(utt("a", "fly to boston now", "O O B-city O"), TripleMode::kAllSpans).triples;
  const auto d = build_step1_training_set(triples, enc);
  CHECK(d.size() == 10);
  CHECK(std::count(d.y.begin(), d.y.end(), 1u) == 1);
  CHECK(std::count(d.y.begin(), d.y.end(), 0u) == 9);
  CHECK(d.x.cols() == 8);
  CHECK(d.num_classes == 2);
}

TEST_CASE("step 1 set rejects a corpus without slots") {
  ToyEncoder enc;
  const auto triples = make_triples(utt("a", "a b c", "O O O"), TripleMode::kAllSpans).triples;
  CHECK_THROWS_AS(build_step1_training_set(triples, enc), ArgumentError);
}

TEST_CASE("step 1 positives equal the gold spans within the cap") {
  ToyEncoderConfig cfg;
  cfg.dim = 2;
  ToyEncoder enc(cfg);
  std::mt19937_64 rng(2);
  const Corpus c = make_corpus(testutil::random_utterances(rng, 30, 14, 3, 7), Split::kTrain);
  const auto triples = make_corpus_triples(c, TripleMode::kAllSpans, 5).triples;
  std::size_t expect = 0;
  for (const auto& u : c.utterances)
    for (const auto& run : oracle::bio_runs(u.labels)) expect += std::get<1>(run) <= 5;
  const auto d = build_step1_training_set(triples, enc);
  CHECK(static_cast<std::size_t>(std::count(d.y.begin(), d.y.end(), 1u)) == expect);
}

TEST_CASE("step 2 sets with and without NONE") {
  ToyEncoderConfig cfg;
  cfg.dim = 3;
  ToyEncoder enc(cfg);
  const Corpus c = make_corpus({utt("1", "x y z", "B-A O B-B"), utt("2", "x y z w", "B-A B-A O B-B")},
                               Split::kTrain);
  const auto gold = make_corpus_triples(c, TripleMode::kGoldOnly).triples;
  const auto without = build_step2_training_set(gold, enc, c.ontology, false);
  CHECK(without.data.size() == 5);
  CHECK(without.class_map == std::vector<SlotLabel>{SlotLabel("A"), SlotLabel("B")});
  CHECK(std::count(without.data.y.begin(), without.data.y.end(), 0u) == 3);

  const auto all = make_corpus_triples(c, TripleMode::kAllSpans).triples;
  const auto with = build_step2_training_set(all, enc, c.ontology, true);
  const std::size_t none_spans = oracle::span_count(3, 5) + oracle::span_count(4, 5) - 5;
  CHECK(with.data.size() == 5 + none_spans);
  CHECK(static_cast<std::size_t>(std::count(with.data.y.begin(), with.data.y.end(), 2u)) ==
        none_spans);
  CHECK(with.class_map.size() == 3);
  CHECK_FALSE(with.class_map.back().has_value());
}

TEST_CASE("NONE cap per sentence") {
  const auto s = generate_synthetic_corpus(10, 1, 4);
  const auto all = make_corpus_triples(s.train, TripleMode::kAllSpans).triples;
  const auto capped = cap_none_triples(all, 3, 1);
  std::map<std::string, std::size_t> none;
  std::size_t labelled = 0, labelled_all = 0;
  for (const auto& t : capped) t.label ? ++labelled : ++none[t.source_id];
  for (const auto& t : all) labelled_all += t.label.has_value();
  CHECK(labelled == labelled_all);
  for (const auto& [id, n] : none) CHECK(n <= 3);
  CHECK(cap_none_triples(all, 0, 1) == all);
  CHECK(cap_none_triples(all, 3, 1) == capped);
}

TEST_CASE("binary threshold is inclusive") {
  const Eigen::VectorXd v = Eigen::VectorXd::Ones(4);
  CHECK(predict_binary(constant_classifier(ClassifierRole::kBinaryFilter, 2, {0.3, 0.7}), v, 0.5).is_slot);
  CHECK(predict_binary(constant_classifier(ClassifierRole::kBinaryFilter, 2, {0.5, 0.5}), v, 0.5).is_slot);
  const auto low = predict_binary(constant_classifier(ClassifierRole::kBinaryFilter, 2, {0.51, 0.49}), v, 0.5);
  CHECK_FALSE(low.is_slot);
  CHECK(low.score == doctest::Approx(0.49));
}

TEST_CASE("slot type argmax and ties") {
  const Eigen::VectorXd v = Eigen::VectorXd::Ones(4);
  const std::vector<SlotLabel> map{SlotLabel("airline"), SlotLabel("city"), SlotLabel("day")};
  const auto best = predict_slot_type(
      constant_classifier(ClassifierRole::kSlotType, 2, {0.2, 0.7, 0.1}, map), v);
  CHECK(best.label == SlotLabel("city"));
  CHECK(best.confidence == doctest::Approx(0.7));
  const auto tie = predict_slot_type(
      constant_classifier(ClassifierRole::kSlotType, 2, {0.4, 0.2, 0.4}, map), v);
  CHECK(tie.class_index == 0);
  CHECK_THROWS_AS(predict_slot_type(constant_classifier(ClassifierRole::kSlotType, 3, {0.5, 0.5},
                                                        {SlotLabel("a"), SlotLabel("b")}),
                                    v),
                  ArgumentError);
}

TEST_CASE("trained classifiers save and load") {
  ToyEncoderConfig ecfg;
  ecfg.dim = 4;
  ToyEncoder enc(ecfg);
  const auto s = generate_synthetic_corpus(20, 1, 1);
  const auto all = make_corpus_triples(s.train, TripleMode::kAllSpans).triples;
  Stage2Config cfg;
  cfg.step1_hidden = {8};
  cfg.step2_hidden = {8};
  cfg.step1.epochs = 2;
  cfg.step2.epochs = 2;
  const auto step1 = train_step1(build_step1_training_set(all, enc), enc, cfg).classifier;
  const auto step2 =
      train_step2(build_step2_training_set(all, enc, s.train.ontology, true), enc, cfg).classifier;
  CHECK(step1.role == ClassifierRole::kBinaryFilter);
  CHECK(step2.class_map.size() == s.train.ontology.size() + 1);

  const auto dir = std::filesystem::temp_directory_path() / "twosl_test_step2";
  std::filesystem::remove_all(dir);
  save_classifier(step2, dir);
  const auto back = load_classifier(dir);
  CHECK(back.model == step2.model);
  CHECK(back.class_map == step2.class_map);
  CHECK(back.encoder_name == enc.name());
  CHECK(back.encoder_dim == 4);
  CHECK(back.role == ClassifierRole::kSlotType);
}

TEST_CASE("config json round trip") {
  Stage2Config cfg;
  cfg.step1_hidden = {3};
  cfg.step2.epochs = 7;
  cfg.include_none_class = true;
  const auto back = stage2_config_from_json(to_json(cfg));
  CHECK(back.step1_hidden == std::vector<std::size_t>{3});
  CHECK(back.step2_hidden == cfg.step2_hidden);
  CHECK(back.step2.epochs == 7);
  CHECK(back.include_none_class);
  CHECK_FALSE(back.fine_tune_encoder);
  CHECK(stage2_config_from_json({{"fine_tune_encoder", true}}).fine_tune_encoder);
}

TEST_CASE("step 2 loss gradient reaches the encoder parameters") {
  ToyEncoderConfig ecfg;
  ecfg.dim = 4;
  ToyEncoder enc(ecfg);
  const auto s = generate_synthetic_corpus(3, 1, 5);
  const auto gold = make_corpus_triples(s.train, TripleMode::kGoldOnly).triples;
  REQUIRE(!gold.empty());
  const auto d = build_step2_training_set(gold, enc, s.train.ontology, false);
  MLPModel m({8, {5}, d.class_map.size()}, 3);

  MLPModel::Gradients g;
  m.loss(encode_pair_items(enc, gold), d.data.y, &g);
  enc.zero_grad();
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const Eigen::VectorXd row = g.input.row(static_cast<Eigen::Index>(i)).transpose();
    enc.backward(gold[i].masked_text, {row.data(), 4});
    enc.backward(gold[i].span_text, {row.data() + 4, 4});
  }
  auto f = [&] { return m.loss(encode_pair_items(enc, gold), d.data.y); };
  std::size_t checked = 0;
  for (auto& block : enc.parameters())
    for (std::size_t i = 0; i < block.values.size(); ++i, ++checked) {
      const double numeric = oracle::central_difference(f, block.values[i], 1e-6);
      CHECK(block.grads[i] == doctest::Approx(numeric).epsilon(1e-5));
    }
  CHECK(checked > 0);
}

TEST_CASE("joint step 2 training updates the encoder deterministically") {
  ToyEncoderConfig ecfg;
  ecfg.dim = 8;
  const ToyEncoder base(ecfg);
  const auto s = generate_synthetic_corpus(20, 1, 2);
  const auto gold = make_corpus_triples(s.train, TripleMode::kGoldOnly).triples;
  Stage2Config cfg;
  cfg.step2_hidden = {16};
  cfg.step2.epochs = 15;
  cfg.step2.learning_rate = 0.01;
  cfg.fine_tune_encoder = true;

  auto run = [&] {
    auto enc = base.clone();
    auto r = train_step2_end_to_end(gold, *enc, s.train.ontology, false, cfg);
    return std::make_pair(std::move(r), enc->serialize_parameters());
  };
  const auto [a, params_a] = run();
  const auto [b, params_b] = run();
  CHECK(a.classifier.model == b.classifier.model);
  CHECK(params_a == params_b);
  CHECK(params_a != base.serialize_parameters());
  CHECK(a.classifier.role == ClassifierRole::kSlotType);
  CHECK(a.classifier.class_map.size() == s.train.ontology.size());
  REQUIRE(a.curve.size() == 15);
  CHECK(a.curve.back().mean_loss < a.curve.front().mean_loss);

  cfg.step2.epochs = 0;
  auto untouched = base.clone();
  const auto z = train_step2_end_to_end(gold, *untouched, s.train.ontology, false, cfg);
  CHECK(untouched->serialize_parameters() == base.serialize_parameters());
  CHECK(z.classifier.model == MLPModel({16, {16}, s.train.ontology.size()}, cfg.seed + 1));

  cfg.step2.epochs = 3;
  auto cont = base.clone();
  const auto c = train_step2_end_to_end(gold, *cont, s.train.ontology, false, cfg, {},
                                        &a.classifier.model);
  CHECK(c.classifier.model.architecture() == a.classifier.model.architecture());
  CHECK_THROWS_AS(train_step2_end_to_end(gold, *cont, s.train.ontology, true, cfg, {},
                                         &a.classifier.model),
                  ArgumentError);
}

}  // TEST_SUITE
