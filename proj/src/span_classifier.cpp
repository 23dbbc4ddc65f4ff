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

#include "twosl/span_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "twosl/checksum.hpp"
#include "twosl/contrastive.hpp"
#include "twosl/error.hpp"

namespace twosl {
namespace {

void check_dim(const SpanClassifier& c, Eigen::Index cols) {
  if (static_cast<std::size_t>(cols) != c.model.input_dim())
    throw ArgumentError("classifier expects vectors of dim " +
                        std::to_string(c.model.input_dim()) + ", got " + std::to_string(cols));
}

LabeledVectors encode_labeled(std::span<const SpanTriple> triples, const SentenceEncoder& encoder,
                              std::vector<std::size_t> labels, std::size_t num_classes,
                              std::size_t batch_size) {
  LabeledVectors out;
  out.x = encode_pair_items(encoder, triples, batch_size);
  out.y = std::move(labels);
  out.num_classes = num_classes;
  return out;
}

struct Step2Selection {
  std::vector<SpanTriple> kept;
  std::vector<std::size_t> y;
  std::vector<SlotLabel> class_map;
};

Step2Selection select_step2(std::span<const SpanTriple> triples, const SlotOntology& ontology,
                            bool include_none) {
  Step2Selection out;
  for (const auto& t : ontology.slot_types()) out.class_map.emplace_back(t);
  if (include_none) out.class_map.emplace_back(std::nullopt);
  const std::size_t none_index = ontology.size();
  for (const auto& t : triples) {
    if (t.label) {
      const auto idx = ontology.index_of(*t.label);
      if (!idx) throw ArgumentError("slot type '" + *t.label + "' is not in the ontology");
      out.y.push_back(*idx);
    } else if (include_none) {
      out.y.push_back(none_index);
    } else {
      continue;
    }
    out.kept.push_back(t);
  }
  if (out.kept.empty()) throw ArgumentError("step 2 training set is empty");
  return out;
}

}  // namespace

void Stage2Config::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0,1)");
  if (step1.batch_size == 0 || step2.batch_size == 0)
    throw ConfigError("stage 2 batch sizes must be positive");
}

nlohmann::json to_json(const Stage2Config& cfg) {
  return {{"step1_hidden", cfg.step1_hidden},
          {"step2_hidden", cfg.step2_hidden},
          {"step1", to_json(cfg.step1)},
          {"step2", to_json(cfg.step2)},
          {"threshold", cfg.threshold},
          {"include_none_class", cfg.include_none_class},
          {"max_none_per_sentence", cfg.max_none_per_sentence},
          {"encode_batch_size", cfg.encode_batch_size},
          {"seed", cfg.seed},
          {"fine_tune_encoder", cfg.fine_tune_encoder}};
}

Stage2Config stage2_config_from_json(const nlohmann::json& j) {
  Stage2Config cfg;
  cfg.step1_hidden = j.value("step1_hidden", cfg.step1_hidden);
  cfg.step2_hidden = j.value("step2_hidden", cfg.step2_hidden);
  if (j.contains("step1")) cfg.step1 = schedule_from_json(j.at("step1"), cfg.step1);
  if (j.contains("step2")) cfg.step2 = schedule_from_json(j.at("step2"), cfg.step2);
  cfg.threshold = j.value("threshold", cfg.threshold);
  cfg.include_none_class = j.value("include_none_class", cfg.include_none_class);
  cfg.max_none_per_sentence = j.value("max_none_per_sentence", cfg.max_none_per_sentence);
  cfg.encode_batch_size = j.value("encode_batch_size", cfg.encode_batch_size);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.fine_tune_encoder = j.value("fine_tune_encoder", cfg.fine_tune_encoder);
  cfg.validate();
  return cfg;
}

std::vector<SpanTriple> cap_none_triples(std::span<const SpanTriple> triples, std::size_t cap,
                                         std::uint64_t seed) {
  if (cap == 0) return {triples.begin(), triples.end()};
  std::map<std::string, std::vector<std::size_t>> none_by_sentence;
  for (std::size_t i = 0; i < triples.size(); ++i)
    if (!triples[i].label) none_by_sentence[triples[i].source_id].push_back(i);
  std::vector<bool> keep(triples.size(), true);
  std::mt19937_64 rng(seed);
  for (auto& [id, idx] : none_by_sentence) {
    if (idx.size() <= cap) continue;
    std::vector<std::size_t> chosen;
    std::sample(idx.begin(), idx.end(), std::back_inserter(chosen), cap, rng);
    for (auto i : idx) keep[i] = false;
    for (auto i : chosen) keep[i] = true;
  }
  std::vector<SpanTriple> out;
  for (std::size_t i = 0; i < triples.size(); ++i)
    if (keep[i]) out.push_back(triples[i]);
  return out;
}

LabeledVectors build_step1_training_set(std::span<const SpanTriple> triples,
                                        const SentenceEncoder& encoder, std::size_t batch_size) {
  std::vector<std::size_t> y;
  y.reserve(triples.size());
  for (const auto& t : triples) y.push_back(t.label ? 1 : 0);
  if (std::find(y.begin(), y.end(), 1) == y.end())
    throw ArgumentError("step 1 training set has no slot spans; the filter is untrainable");
  return encode_labeled(triples, encoder, std::move(y), 2, batch_size);
}

Step2Dataset build_step2_training_set(std::span<const SpanTriple> triples,
                                      const SentenceEncoder& encoder,
                                      const SlotOntology& ontology, bool include_none,
                                      std::size_t batch_size) {
  auto sel = select_step2(triples, ontology, include_none);
  Step2Dataset out;
  out.class_map = std::move(sel.class_map);
  out.data = encode_labeled(sel.kept, encoder, std::move(sel.y), out.class_map.size(), batch_size);
  return out;
}

ClassifierTrainResult train_step1(const LabeledVectors& data, const SentenceEncoder& encoder,
                                  const Stage2Config& cfg,
                                  const std::function<void(const MLPEpochLog&)>& on_epoch) {
  cfg.validate();
  MLPArchitecture arch{2 * encoder.dim(), cfg.step1_hidden, 2};
  auto trained = train_mlp(data, arch, cfg.step1, cfg.seed, on_epoch);
  ClassifierTrainResult out;
  out.classifier = {ClassifierRole::kBinaryFilter, std::move(trained.model), {}, encoder.name(),
                    encoder.dim()};
  out.curve = std::move(trained.curve);
  out.warnings = std::move(trained.warnings);
  return out;
}

ClassifierTrainResult train_step2(const Step2Dataset& data, const SentenceEncoder& encoder,
                                  const Stage2Config& cfg,
                                  const std::function<void(const MLPEpochLog&)>& on_epoch) {
  cfg.validate();
  MLPArchitecture arch{2 * encoder.dim(), cfg.step2_hidden, data.class_map.size()};
  auto trained = train_mlp(data.data, arch, cfg.step2, cfg.seed + 1, on_epoch);
  ClassifierTrainResult out;
  out.classifier = {ClassifierRole::kSlotType, std::move(trained.model), data.class_map,
                    encoder.name(), encoder.dim()};
  out.curve = std::move(trained.curve);
  out.warnings = std::move(trained.warnings);
  return out;
}

ClassifierTrainResult train_step2_end_to_end(
    std::span<const SpanTriple> triples, TrainableEncoder& encoder, const SlotOntology& ontology,
    bool include_none, const Stage2Config& cfg,
    const std::function<void(const MLPEpochLog&)>& on_epoch, const MLPModel* init) {
  cfg.validate();
  auto sel = select_step2(triples, ontology, include_none);
  const std::size_t dim = encoder.dim();
  const auto d = static_cast<Eigen::Index>(dim);
  const MLPArchitecture arch{2 * dim, cfg.step2_hidden, sel.class_map.size()};
  MLPModel model = init ? *init : MLPModel(arch, cfg.seed + 1);
  if (model.input_dim() != arch.input_dim || model.output_dim() != arch.output_dim)
    throw ArgumentError("initial step 2 model does not match the training set");
  const TrainSchedule& sched = cfg.step2;

  AdamSettings opt;
  opt.learning_rate = sched.learning_rate;
  opt.weight_decay = sched.weight_decay;
  AdamSettings enc_opt = opt;
  enc_opt.decoupled_weight_decay = true;
  const std::size_t layers = model.weights().size();
  std::vector<AdamState> w_state(layers), b_state(layers);

  ClassifierTrainResult out;
  const std::set<std::size_t> present(sel.y.begin(), sel.y.end());
  if (present.size() == 1)
    out.warnings.push_back("single-class training set: classifier is constant");

  std::mt19937_64 rng(cfg.seed + 1);
  std::vector<std::size_t> order(sel.kept.size());
  std::iota(order.begin(), order.end(), 0);
  MLPModel::Gradients grads;
  for (std::size_t epoch = 0; epoch < sched.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += sched.batch_size) {
      const std::size_t end = std::min(order.size(), begin + sched.batch_size);
      std::vector<SpanTriple> batch;
      std::vector<std::size_t> yb;
      for (std::size_t i = begin; i < end; ++i) {
        batch.push_back(sel.kept[order[i]]);
        yb.push_back(sel.y[order[i]]);
      }
      const Eigen::MatrixXd xb = encode_pair_items(encoder, batch, batch.size());
      const double loss = model.loss(xb, yb, &grads);
      if (!std::isfinite(loss))
        throw TrainingError("step 2: non-finite loss at epoch " + std::to_string(epoch));
      loss_sum += loss * static_cast<double>(end - begin);

      encoder.zero_grad();
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const Eigen::VectorXd g = grads.input.row(static_cast<Eigen::Index>(i)).transpose();
        encoder.backward(batch[i].masked_text, {g.data(), dim});
        encoder.backward(batch[i].span_text, {g.data() + d, dim});
      }
      for (std::size_t l = 0; l < layers; ++l) {
        auto& w = model.weights()[l];
        auto& b = model.biases()[l];
        w_state[l].update({w.data(), static_cast<std::size_t>(w.size())},
                          {grads.weights[l].data(), static_cast<std::size_t>(w.size())}, opt);
        b_state[l].update({b.data(), static_cast<std::size_t>(b.size())},
                          {grads.biases[l].data(), static_cast<std::size_t>(b.size())}, opt);
      }
      encoder.step(enc_opt);
    }
    // Training accuracy of the end-of-epoch model on freshly encoded inputs.
    const Eigen::MatrixXd scores =
        model.logits(encode_pair_items(encoder, sel.kept, cfg.encode_batch_size));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < sel.y.size(); ++i) {
      Eigen::Index arg = 0;
      scores.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
      correct += static_cast<std::size_t>(arg) == sel.y[i];
    }
    const auto n = static_cast<double>(sel.y.size());
    MLPEpochLog log{epoch, loss_sum / n, static_cast<double>(correct) / n};
    if (on_epoch) on_epoch(log);
    out.curve.push_back(log);
  }
  out.classifier = {ClassifierRole::kSlotType, std::move(model), std::move(sel.class_map),
                    encoder.name(), dim};
  return out;
}

std::vector<BinaryDecision> predict_binary_batch(const SpanClassifier& filter,
                                                 const Eigen::MatrixXd& vecs, double threshold) {
  check_dim(filter, vecs.cols());
  if (filter.model.output_dim() != 2) throw ConfigError("binary filter must have 2 outputs");
  const Eigen::MatrixXd p = filter.model.probabilities(vecs);
  std::vector<BinaryDecision> out(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index r = 0; r < p.rows(); ++r)
    out[r] = {p(r, 1) >= threshold, p(r, 1)};
  return out;
}

BinaryDecision predict_binary(const SpanClassifier& filter, const Eigen::VectorXd& vec,
                              double threshold) {
  return predict_binary_batch(filter, vec.transpose(), threshold).front();
}

std::vector<TypeDecision> predict_slot_type_batch(const SpanClassifier& classifier,
                                                  const Eigen::MatrixXd& vecs) {
  check_dim(classifier, vecs.cols());
  if (classifier.class_map.size() != classifier.model.output_dim())
    throw ConfigError("class map does not match classifier output dim");
  const Eigen::MatrixXd p = classifier.model.probabilities(vecs);
  std::vector<TypeDecision> out(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < p.cols(); ++c)
      if (p(r, c) > p(r, best)) best = c;
    out[r] = {classifier.class_map[best], p(r, best), static_cast<std::size_t>(best)};
  }
  return out;
}

TypeDecision predict_slot_type(const SpanClassifier& classifier, const Eigen::VectorXd& vec) {
  return predict_slot_type_batch(classifier, vec.transpose()).front();
}

void save_classifier(const SpanClassifier& c, const std::filesystem::path& dir) {
  const std::string blob = c.model.serialize();
  nlohmann::json class_map = nlohmann::json::array();
  for (const auto& l : c.class_map) class_map.push_back(l ? nlohmann::json(*l) : nlohmann::json());
  const auto& arch = c.model.architecture();
  nlohmann::json manifest = {
      {"role", c.role == ClassifierRole::kBinaryFilter ? "binary_filter" : "slot_type"},
      {"arch", {{"input_dim", arch.input_dim}, {"hidden", arch.hidden}, {"output_dim", arch.output_dim}}},
      {"class_map", class_map},
      {"encoder_name", c.encoder_name},
      {"D", c.encoder_dim},
      {"blob", "params.bin"},
      {"content_hash", "sha256:" + sha256_hex(blob)},
  };
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "params.bin", blob);
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

SpanClassifier load_classifier(const std::filesystem::path& dir) {
  try {
    const auto manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
    const std::string blob = read_file(dir / manifest.at("blob").get<std::string>());
    if ("sha256:" + sha256_hex(blob) != manifest.at("content_hash").get<std::string>())
      throw IntegrityError("classifier content hash mismatch in " + dir.string());
    SpanClassifier c;
    c.role = manifest.at("role") == "binary_filter" ? ClassifierRole::kBinaryFilter
                                                    : ClassifierRole::kSlotType;
    c.model = MLPModel::deserialize(blob);
    for (const auto& l : manifest.at("class_map"))
      c.class_map.push_back(l.is_null() ? SlotLabel{} : SlotLabel{l.get<std::string>()});
    c.encoder_name = manifest.at("encoder_name").get<std::string>();
    c.encoder_dim = manifest.at("D").get<std::size_t>();
    const auto& arch = manifest.at("arch");
    if (arch.at("input_dim").get<std::size_t>() != c.model.input_dim() ||
        arch.at("output_dim").get<std::size_t>() != c.model.output_dim() ||
        c.model.input_dim() != 2 * c.encoder_dim)
      throw IntegrityError("classifier manifest does not match its parameters in " + dir.string());
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError("malformed classifier manifest in " + dir.string() + ": " + e.what());
  }
}

}  // namespace twosl
