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

#include "twosl/encoder.hpp"

#include <map>
#include <mutex>

#include "twosl/checksum.hpp"
#include "twosl/error.hpp"
#include "twosl/toy_encoder.hpp"

namespace twosl {
namespace {

constexpr const char* kBlobName = "params.bin";

struct Registry {
  std::mutex mu;
  std::map<std::string, EncoderLoader> loaders;
};

Registry& registry() {
  static Registry* r = [] {
    auto* init = new Registry;
    init->loaders["toy"] = [](const nlohmann::json& config, std::string_view blob) {
      return std::unique_ptr<SentenceEncoder>(ToyEncoder::from_checkpoint(config, blob));
    };
    return init;
  }();
  return *r;
}

}  // namespace

Eigen::MatrixXd SentenceEncoder::encode_batch(
    const std::vector<std::string>& texts) const {
  if (texts.empty()) throw ArgumentError("encode_batch: empty batch");
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (texts[i].find_first_not_of(" \t\n\r") == std::string::npos)
      throw ArgumentError("encode_batch: text " + std::to_string(i) + " is empty");
  }
  Eigen::MatrixXd out = do_encode_batch(texts);
  if (static_cast<std::size_t>(out.rows()) != texts.size() ||
      static_cast<std::size_t>(out.cols()) != dim())
    throw Error("encoder " + name() + " returned a batch of the wrong shape");
  return out;
}

Eigen::VectorXd SentenceEncoder::encode(const std::string& text) const {
  return encode_batch({text}).row(0).transpose();
}

Eigen::MatrixXd SentenceEncoder::do_encode_batch(
    const std::vector<std::string>& texts) const {
  Eigen::MatrixXd out(texts.size(), dim());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    try {
      out.row(i) = encode_one(texts[i]).transpose();
    } catch (const std::exception& e) {
      throw Error("encoder " + name() + " failed on text " + std::to_string(i) +
                  ": " + e.what());
    }
  }
  return out;
}

void register_encoder_backend(const std::string& kind, EncoderLoader loader) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  r.loaders[kind] = std::move(loader);
}

nlohmann::json save_checkpoint(const SentenceEncoder& encoder,
                               const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string blob = encoder.serialize_parameters();
  nlohmann::json manifest = {
      {"name", encoder.name()},
      {"kind", encoder.kind()},
      {"dim", encoder.dim()},
      {"trainable", encoder.trainable()},
      {"blobs", {{{"file", kBlobName}, {"bytes", blob.size()}}}},
      {"content_hash", "sha256:" + sha256_hex(blob)},
      {"config", encoder.config()},
  };
  write_file_atomic(dir / kBlobName, blob);
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

std::unique_ptr<SentenceEncoder> load_checkpoint(const std::filesystem::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError("corrupt encoder manifest in " + dir.string() + ": " + e.what());
  }
  try {
    const auto& blob_entry = manifest.at("blobs").at(0);
    const std::string blob = read_file(dir / blob_entry.at("file").get<std::string>());
    if (blob.size() != blob_entry.at("bytes").get<std::size_t>())
      throw IntegrityError("parameter blob in " + dir.string() + " has " +
                           std::to_string(blob.size()) + " bytes, manifest says " +
                           std::to_string(blob_entry.at("bytes").get<std::size_t>()));
    if ("sha256:" + sha256_hex(blob) != manifest.at("content_hash").get<std::string>())
      throw IntegrityError("content hash mismatch in " + dir.string());

    const auto kind = manifest.at("kind").get<std::string>();
    EncoderLoader loader;
    {
      auto& r = registry();
      std::lock_guard lock(r.mu);
      auto it = r.loaders.find(kind);
      if (it == r.loaders.end())
        throw ConfigError("no encoder backend registered for kind '" + kind + "'");
      loader = it->second;
    }
    auto encoder = loader(manifest.at("config"), blob);
    if (encoder->dim() != manifest.at("dim").get<std::size_t>())
      throw IntegrityError("encoder dim " + std::to_string(encoder->dim()) +
                           " does not match manifest dim " +
                           manifest.at("dim").dump());
    return encoder;
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError("malformed encoder manifest in " + dir.string() + ": " + e.what());
  }
}

std::vector<std::string> whitespace_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace twosl
