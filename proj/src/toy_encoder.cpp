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

#include "twosl/toy_encoder.hpp"

#include <cmath>
#include <cstring>
#include <random>

#include "twosl/error.hpp"

namespace twosl {
namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class BlobReader {
 public:
  explicit BlobReader(std::string_view blob) : blob_(blob) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, blob_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string get_string(std::size_t n) {
    need(n);
    std::string s(blob_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == blob_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > blob_.size()) throw IntegrityError("toy encoder blob is truncated");
  }
  std::string_view blob_;
  std::size_t pos_ = 0;
};

}  // namespace

ToyEncoder::ToyEncoder(ToyEncoderConfig config) : config_(std::move(config)) {
  if (config_.dim == 0) throw ArgumentError("toy encoder dim must be positive");
}

std::string ToyEncoder::name() const {
  return "toy-d" + std::to_string(config_.dim) + "-s" + std::to_string(config_.seed);
}

nlohmann::json ToyEncoder::config() const {
  return {{"dim", config_.dim},
          {"seed", config_.seed},
          {"init_scale", config_.init_scale},
          {"context_weight", config_.context_weight},
          {"mask_token", config_.mask_token}};
}

std::unique_ptr<ToyEncoder> ToyEncoder::from_checkpoint(const nlohmann::json& config,
                                                        std::string_view blob) {
  ToyEncoderConfig cfg;
  cfg.dim = config.at("dim").get<std::size_t>();
  cfg.seed = config.at("seed").get<std::uint64_t>();
  cfg.init_scale = config.at("init_scale").get<double>();
  cfg.context_weight = config.value("context_weight", 0.5);
  cfg.mask_token = config.at("mask_token").get<std::string>();
  auto enc = std::make_unique<ToyEncoder>(cfg);

  BlobReader reader(blob);
  const auto stored_dim = reader.get<std::uint64_t>();
  if (stored_dim != cfg.dim)
    throw IntegrityError("toy encoder blob dim " + std::to_string(stored_dim) +
                         " does not match config dim " + std::to_string(cfg.dim));
  const auto count = reader.get<std::uint64_t>();
  for (std::uint64_t r = 0; r < count; ++r) {
    const auto len = reader.get<std::uint32_t>();
    std::string word = reader.get_string(len);
    Row row;
    row.value.resize(cfg.dim);
    for (auto& v : row.value) v = reader.get<double>();
    row.grad.assign(cfg.dim, 0.0);
    enc->rows_.emplace(std::move(word), std::move(row));
  }
  if (!reader.done()) throw IntegrityError("trailing bytes in toy encoder blob");
  return enc;
}

std::string ToyEncoder::serialize_parameters() const {
  std::string out;
  put<std::uint64_t>(out, config_.dim);
  put<std::uint64_t>(out, rows_.size());
  for (const auto& [word, row] : rows_) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(word.size()));
    out += word;
    for (double v : row.value) put<double>(out, v);
  }
  return out;
}

std::vector<double> ToyEncoder::initial_row(const std::string& word) const {
  std::mt19937_64 rng(fnv1a(word) ^ (config_.seed * 0x9e3779b97f4a7c15ULL));
  std::normal_distribution<double> normal(
      0.0, config_.init_scale / std::sqrt(static_cast<double>(config_.dim)));
  std::vector<double> v(config_.dim);
  for (auto& x : v) x = normal(rng);
  return v;
}

Eigen::VectorXd ToyEncoder::embedding(const std::string& word) const {
  if (auto it = rows_.find(word); it != rows_.end())
    return Eigen::Map<const Eigen::VectorXd>(it->second.value.data(), config_.dim);
  auto v = initial_row(word);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), config_.dim);
}

Eigen::VectorXd ToyEncoder::encode_one(const std::string& text) const {
  const auto tokens = whitespace_tokens(text);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(config_.dim);
  for (const auto& t : tokens) sum += embedding(t);
  return sum / static_cast<double>(tokens.size());
}

ToyEncoder::Row& ToyEncoder::materialize(const std::string& word) {
  auto it = rows_.find(word);
  if (it == rows_.end()) {
    Row row;
    row.value = initial_row(word);
    row.grad.assign(config_.dim, 0.0);
    it = rows_.emplace(word, std::move(row)).first;
  }
  return it->second;
}

void ToyEncoder::accumulate(const std::string& word, const double* grad, double scale) {
  Row& row = materialize(word);
  for (std::size_t k = 0; k < config_.dim; ++k) row.grad[k] += scale * grad[k];
  if (!row.touched) {
    row.touched = true;
    touched_.push_back(&row);
  }
}

void ToyEncoder::zero_grad() {
  for (Row* row : touched_) {
    std::fill(row->grad.begin(), row->grad.end(), 0.0);
    row->touched = false;
  }
  touched_.clear();
}

void ToyEncoder::backward(const std::string& text, std::span<const double> grad_output) {
  if (grad_output.size() != config_.dim)
    throw ArgumentError("toy encoder backward: gradient has wrong dimension");
  const auto tokens = whitespace_tokens(text);
  if (tokens.empty()) throw ArgumentError("toy encoder backward: empty text");
  const double scale = 1.0 / static_cast<double>(tokens.size());
  for (const auto& t : tokens) accumulate(t, grad_output.data(), scale);
}

// Lazy Adam: only rows with gradient this step are updated, each with its own
// bias-correction counter.
void ToyEncoder::step(const AdamSettings& settings) {
  for (Row* row : touched_) row->adam.update(row->value, row->grad, settings);
  zero_grad();
}

std::vector<ParamBlock> ToyEncoder::parameters() {
  std::vector<ParamBlock> out;
  out.reserve(rows_.size());
  for (auto& [word, row] : rows_) out.push_back({"embedding/" + word, row.value, row.grad});
  return out;
}

std::unique_ptr<TrainableEncoder> ToyEncoder::clone() const {
  auto copy = std::make_unique<ToyEncoder>(config_);
  for (const auto& [word, row] : rows_) {
    Row r;
    r.value = row.value;
    r.grad.assign(config_.dim, 0.0);
    r.adam = row.adam;
    copy->rows_.emplace(word, std::move(r));
  }
  return copy;
}

Eigen::MatrixXd ToyEncoder::encode_tokens(const std::vector<std::string>& tokens) const {
  const std::size_t n = tokens.size();
  Eigen::MatrixXd emb(n, config_.dim);
  for (std::size_t i = 0; i < n; ++i) emb.row(i) = embedding(tokens[i]).transpose();
  Eigen::MatrixXd out = emb;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) out.row(i) += config_.context_weight * emb.row(i - 1);
    if (i + 1 < n) out.row(i) += config_.context_weight * emb.row(i + 1);
  }
  return out;
}

void ToyEncoder::backward_tokens(const std::vector<std::string>& tokens,
                                 const Eigen::MatrixXd& grad_output) {
  const std::size_t n = tokens.size();
  if (static_cast<std::size_t>(grad_output.rows()) != n ||
      static_cast<std::size_t>(grad_output.cols()) != config_.dim)
    throw ArgumentError("toy encoder backward_tokens: gradient has wrong shape");
  // Row-major copy so each token's gradient row is contiguous.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> g =
      grad_output;
  for (std::size_t i = 0; i < n; ++i) {
    accumulate(tokens[i], g.row(i).data(), 1.0);
    if (i > 0) accumulate(tokens[i - 1], g.row(i).data(), config_.context_weight);
    if (i + 1 < n) accumulate(tokens[i + 1], g.row(i).data(), config_.context_weight);
  }
}

}  // namespace twosl
