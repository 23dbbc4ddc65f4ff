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

#include "twosl/span_transform.hpp"

#include <algorithm>
#include <map>

#include "twosl/error.hpp"

namespace twosl {
namespace {

std::string join(const std::vector<std::string>& tokens, std::size_t begin,
                 std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out += ' ';
    out += tokens[i];
  }
  return out;
}

void check_span(const Utterance& u, const Span& span) {
  if (span.length == 0 || span.end() > u.size())
    throw ArgumentError("span (" + std::to_string(span.start) + "," +
                        std::to_string(span.length) +
                        ") out of range for utterance " + u.id + " of " +
                        std::to_string(u.size()) + " tokens");
}

}  // namespace

std::string label_name(const SlotLabel& label) {
  return label ? *label : std::string("NONE");
}

std::vector<Span> enumerate_spans(const Utterance& utterance,
                                  std::size_t max_span) {
  if (max_span == 0) throw ArgumentError("max_span must be at least 1");
  const std::size_t n = utterance.size();
  if (n == 0) throw ArgumentError("cannot enumerate spans of an empty utterance");
  std::vector<Span> spans;
  for (std::size_t start = 0; start < n; ++start) {
    const std::size_t longest = std::min(max_span, n - start);
    for (std::size_t len = 1; len <= longest; ++len) spans.push_back({start, len});
  }
  return spans;
}

std::vector<std::pair<Span, std::string>> gold_slot_spans(
    const Utterance& utterance) {
  std::vector<std::pair<Span, std::string>> out;
  for (std::size_t i = 0; i < utterance.labels.size(); ++i) {
    const auto tag = parse_tag(utterance.labels[i]);
    if (!tag) continue;
    if (tag->kind == BioTag::Kind::kBegin) {
      out.push_back({Span{i, 1}, tag->type});
    } else if (tag->kind == BioTag::Kind::kInside && !out.empty() &&
               out.back().first.end() == i) {
      ++out.back().first.length;
    }
  }
  return out;
}

std::string render_masked(const Utterance& utterance, const Span& span,
                          const std::string& mask_token) {
  check_span(utterance, span);
  std::string out;
  for (std::size_t i = 0; i < utterance.size(); ++i) {
    if (i > 0) out += ' ';
    out += (i >= span.start && i < span.end()) ? mask_token : utterance.tokens[i];
  }
  return out;
}

SpanTriple make_triple(const Utterance& utterance, const Span& span,
                       SlotLabel label, const std::string& mask_token) {
  SpanTriple t;
  t.masked_text = render_masked(utterance, span, mask_token);
  t.span_text = join(utterance.tokens, span.start, span.end());
  t.label = std::move(label);
  t.source_id = utterance.id;
  t.span = span;
  return t;
}

TripleSet make_triples(const Utterance& utterance, TripleMode mode,
                       std::size_t max_span, const std::string& mask_token) {
  if (utterance.size() == 0)
    throw ArgumentError("cannot build triples from an empty utterance");
  if (max_span == 0) throw ArgumentError("max_span must be at least 1");
  TripleSet out;
  const auto gold = gold_slot_spans(utterance);
  for (const auto& [span, type] : gold) {
    if (span.length > max_span)
      out.warnings.push_back({utterance.id, span, type});
  }
  if (mode == TripleMode::kGoldOnly) {
    for (const auto& [span, type] : gold)
      out.triples.push_back(make_triple(utterance, span, type, mask_token));
    return out;
  }
  std::map<Span, std::string> by_span(gold.begin(), gold.end());
  for (const auto& span : enumerate_spans(utterance, max_span)) {
    SlotLabel label;
    if (auto it = by_span.find(span); it != by_span.end()) label = it->second;
    out.triples.push_back(make_triple(utterance, span, std::move(label), mask_token));
  }
  return out;
}

TripleSet make_corpus_triples(const Corpus& corpus, TripleMode mode,
                              std::size_t max_span,
                              const std::string& mask_token) {
  TripleSet out;
  for (const auto& u : corpus.utterances) {
    auto part = make_triples(u, mode, max_span, mask_token);
    std::move(part.triples.begin(), part.triples.end(),
              std::back_inserter(out.triples));
    std::move(part.warnings.begin(), part.warnings.end(),
              std::back_inserter(out.warnings));
  }
  return out;
}

nlohmann::json to_json(const SpanTriple& triple) {
  return {{"source_id", triple.source_id},
          {"masked_text", triple.masked_text},
          {"span_text", triple.span_text},
          {"label", triple.label ? nlohmann::json(*triple.label) : nlohmann::json()},
          {"start", triple.span.start},
          {"length", triple.span.length}};
}

SpanTriple triple_from_json(const nlohmann::json& j) {
  SpanTriple t;
  t.source_id = j.at("source_id").get<std::string>();
  t.masked_text = j.at("masked_text").get<std::string>();
  t.span_text = j.at("span_text").get<std::string>();
  if (!j.at("label").is_null()) t.label = j.at("label").get<std::string>();
  t.span = {j.at("start").get<std::size_t>(), j.at("length").get<std::size_t>()};
  return t;
}

}  // namespace twosl
