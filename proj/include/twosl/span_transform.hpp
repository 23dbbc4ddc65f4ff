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
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "twosl/corpus.hpp"

namespace twosl {

inline constexpr std::size_t kDefaultMaxSpan = 5;
inline constexpr const char* kDefaultMaskToken = "[MASK]";

// Contiguous run of tokens [start, start + length).
struct Span {
  std::size_t start = 0;
  std::size_t length = 1;

  std::size_t end() const { return start + length; }
  bool overlaps(const Span& other) const {
    return start < other.end() && other.start < end();
  }
  friend auto operator<=>(const Span&, const Span&) = default;
};

// Slot label of a span; nullopt is the NONE value.
using SlotLabel = std::optional<std::string>;

std::string label_name(const SlotLabel& label);

// (masked sentence, span text, label) record shared by both stages.
struct SpanTriple {
  std::string masked_text;
  std::string span_text;
  SlotLabel label;
  std::string source_id;
  Span span;

  friend bool operator==(const SpanTriple&, const SpanTriple&) = default;
};

enum class TripleMode { kGoldOnly, kAllSpans };

struct TruncationWarning {
  std::string source_id;
  Span span;
  std::string slot_type;
};

struct TripleSet {
  std::vector<SpanTriple> triples;
  std::vector<TruncationWarning> warnings;
};

// All spans of length 1..min(max_span, n), ordered by start then length.
std::vector<Span> enumerate_spans(const Utterance& utterance,
                                  std::size_t max_span);

std::vector<std::pair<Span, std::string>> gold_slot_spans(
    const Utterance& utterance);

std::string render_masked(const Utterance& utterance, const Span& span,
                          const std::string& mask_token = kDefaultMaskToken);

// Triple for `span` with the given label; no gold lookup.
SpanTriple make_triple(const Utterance& utterance, const Span& span,
                       SlotLabel label,
                       const std::string& mask_token = kDefaultMaskToken);

TripleSet make_triples(const Utterance& utterance, TripleMode mode,
                       std::size_t max_span = kDefaultMaxSpan,
                       const std::string& mask_token = kDefaultMaskToken);

// make_triples applied to every utterance, warnings concatenated.
TripleSet make_corpus_triples(const Corpus& corpus, TripleMode mode,
                              std::size_t max_span = kDefaultMaxSpan,
                              const std::string& mask_token = kDefaultMaskToken);

nlohmann::json to_json(const SpanTriple& triple);
SpanTriple triple_from_json(const nlohmann::json& j);

}  // namespace twosl
