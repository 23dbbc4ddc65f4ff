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
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace twosl {

enum class Split { kTrain, kDev, kTest };

std::string_view to_string(Split split);
Split split_from_string(std::string_view name);

// One annotated sentence: whitespace tokens with aligned BIO tags.
struct Utterance {
  std::string id;
  std::string language;
  std::vector<std::string> tokens;
  std::vector<std::string> labels;

  std::size_t size() const { return tokens.size(); }
  std::string text() const;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

// Lexicographically ordered set of slot types. The NONE sentinel is not a
// member; code that needs it represents it as an empty std::optional.
class SlotOntology {
 public:
  SlotOntology() = default;
  explicit SlotOntology(std::vector<std::string> types);

  const std::vector<std::string>& slot_types() const { return types_; }
  std::size_t size() const { return types_.size(); }
  bool contains(std::string_view type) const;
  std::optional<std::size_t> index_of(std::string_view type) const;

  static SlotOntology merge(const SlotOntology& a, const SlotOntology& b);

  friend bool operator==(const SlotOntology&, const SlotOntology&) = default;

 private:
  std::vector<std::string> types_;
};

struct Corpus {
  std::vector<Utterance> utterances;
  SlotOntology ontology;
  Split split = Split::kTrain;

  std::size_t size() const { return utterances.size(); }
  friend bool operator==(const Corpus&, const Corpus&) = default;
};

struct BioViolation {
  std::size_t position;
  std::string reason;

  friend bool operator==(const BioViolation&, const BioViolation&) = default;
};

// Parsed form of a single tag.
struct BioTag {
  enum class Kind { kOutside, kBegin, kInside };
  Kind kind = Kind::kOutside;
  std::string type;
};

// Returns nullopt for strings that are not O, B-<type> or I-<type>.
std::optional<BioTag> parse_tag(std::string_view tag);

// Total function: empty result iff `labels` is a valid BIO sequence.
std::vector<BioViolation> validate_bio(const std::vector<std::string>& labels);

// Column layout of the input files. xSID-style files carry extra columns
// (id, token, intent, slot); ATIS-style files are plain token/tag pairs.
struct ColumnFormat {
  std::size_t token_column = 0;
  std::size_t tag_column = 1;
  // 0 means "take the column count of the first data line".
  std::size_t num_columns = 0;
  std::string language;
};

Corpus parse_bio_corpus(std::istream& in, Split split,
                        const ColumnFormat& format = {});
Corpus read_bio_corpus(const std::string& path, Split split,
                       const ColumnFormat& format = {});

// Writes the two-column format with `# id=` headers. The language is not
// stored; parsing with the same ColumnFormat::language gives back an equal
// corpus.
void write_bio_corpus(std::ostream& out, const Corpus& corpus);
void write_bio_corpus(const std::string& path, const Corpus& corpus);

// Builds a corpus from already tokenized utterances, validating BIO and
// deriving the ontology.
Corpus make_corpus(std::vector<Utterance> utterances, Split split);

// Uniform sample of `count` utterances without replacement. Keeps the parent
// ontology and the parent's relative order.
Corpus sample_few_shot(const Corpus& corpus, std::size_t count,
                       std::uint64_t seed);

nlohmann::json corpus_stats(const Corpus& corpus);

}  // namespace twosl
