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

#include "twosl/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "twosl/error.hpp"

namespace twosl {
namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t begin = 0;
  while (true) {
    const std::size_t pos = line.find('\t', begin);
    cols.push_back(line.substr(begin, pos - begin));
    if (pos == std::string::npos) break;
    begin = pos + 1;
  }
  return cols;
}

std::string_view trim_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

SlotOntology ontology_of(const std::vector<Utterance>& utterances) {
  std::set<std::string> types;
  for (const auto& u : utterances) {
    for (const auto& label : u.labels) {
      if (auto tag = parse_tag(label); tag && tag->kind != BioTag::Kind::kOutside)
        types.insert(tag->type);
    }
  }
  return SlotOntology({types.begin(), types.end()});
}

void check_utterance(const Utterance& u) {
  if (u.tokens.size() != u.labels.size())
    throw ValidationError("utterance " + u.id + ": " +
                          std::to_string(u.tokens.size()) + " tokens but " +
                          std::to_string(u.labels.size()) + " labels");
  for (std::size_t i = 0; i < u.tokens.size(); ++i) {
    if (u.tokens[i].empty() ||
        u.tokens[i].find_first_of(" \t\n") != std::string::npos)
      throw ValidationError("utterance " + u.id + ", position " +
                            std::to_string(i) + ": invalid token '" +
                            u.tokens[i] + "'");
  }
  const auto violations = validate_bio(u.labels);
  if (!violations.empty())
    throw ValidationError("utterance " + u.id + ", position " +
                          std::to_string(violations.front().position) + ": " +
                          violations.front().reason);
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "train";
}

Split split_from_string(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  throw ArgumentError("unknown split '" + std::string(name) + "'");
}

std::string Utterance::text() const {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

SlotOntology::SlotOntology(std::vector<std::string> types)
    : types_(std::move(types)) {
  std::sort(types_.begin(), types_.end());
  types_.erase(std::unique(types_.begin(), types_.end()), types_.end());
  for (const auto& t : types_)
    if (t.empty()) throw ArgumentError("empty slot type");
}

bool SlotOntology::contains(std::string_view type) const {
  return std::binary_search(types_.begin(), types_.end(), type);
}

std::optional<std::size_t> SlotOntology::index_of(std::string_view type) const {
  auto it = std::lower_bound(types_.begin(), types_.end(), type);
  if (it == types_.end() || *it != type) return std::nullopt;
  return static_cast<std::size_t>(it - types_.begin());
}

SlotOntology SlotOntology::merge(const SlotOntology& a, const SlotOntology& b) {
  std::vector<std::string> all = a.types_;
  all.insert(all.end(), b.types_.begin(), b.types_.end());
  return SlotOntology(std::move(all));
}

std::optional<BioTag> parse_tag(std::string_view tag) {
  if (tag == "O") return BioTag{};
  if (tag.size() < 3 || tag[1] != '-') return std::nullopt;
  BioTag out;
  if (tag[0] == 'B') {
    out.kind = BioTag::Kind::kBegin;
  } else if (tag[0] == 'I') {
    out.kind = BioTag::Kind::kInside;
  } else {
    return std::nullopt;
  }
  out.type = std::string(tag.substr(2));
  return out;
}

std::vector<BioViolation> validate_bio(const std::vector<std::string>& labels) {
  std::vector<BioViolation> out;
  std::optional<std::string> open;  // type of the run we are inside, if any
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto tag = parse_tag(labels[i]);
    if (!tag) {
      out.push_back({i, "malformed tag '" + labels[i] + "'"});
      open.reset();
      continue;
    }
    switch (tag->kind) {
      case BioTag::Kind::kOutside:
        open.reset();
        break;
      case BioTag::Kind::kBegin:
        open = tag->type;
        break;
      case BioTag::Kind::kInside:
        if (!open) {
          out.push_back({i, "I without opener"});
        } else if (*open != tag->type) {
          out.push_back({i, "I type mismatch"});
        }
        open = tag->type;
        break;
    }
  }
  return out;
}

Corpus make_corpus(std::vector<Utterance> utterances, Split split) {
  for (const auto& u : utterances) check_utterance(u);
  Corpus corpus;
  corpus.ontology = ontology_of(utterances);
  corpus.utterances = std::move(utterances);
  corpus.split = split;
  return corpus;
}

Corpus parse_bio_corpus(std::istream& in, Split split,
                        const ColumnFormat& format) {
  std::vector<Utterance> utterances;
  Utterance current;
  std::optional<std::string> pending_id;
  std::size_t num_columns = format.num_columns;
  std::size_t line_no = 0;

  auto flush = [&] {
    if (current.tokens.empty()) return;
    current.id = pending_id.value_or(std::string(to_string(split)) + "-" +
                                     std::to_string(utterances.size()));
    current.language = format.language;
    pending_id.reset();
    utterances.push_back(std::move(current));
    current = Utterance{};
  };

  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line(trim_cr(raw));
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      constexpr std::string_view kIdPrefix = "# id=";
      if (current.tokens.empty() && line.rfind(kIdPrefix, 0) == 0)
        pending_id = line.substr(kIdPrefix.size());
      continue;
    }
    const auto cols = split_tabs(line);
    if (num_columns == 0) num_columns = cols.size();
    if (cols.size() != num_columns ||
        std::max(format.token_column, format.tag_column) >= cols.size())
      throw ParseError(line_no, "expected " + std::to_string(num_columns) +
                                    " tab-separated columns, got " +
                                    std::to_string(cols.size()));
    if (cols[format.token_column].empty())
      throw ParseError(line_no, "empty token");
    if (!parse_tag(cols[format.tag_column]))
      throw ParseError(line_no, "malformed tag '" + cols[format.tag_column] + "'");
    current.tokens.push_back(cols[format.token_column]);
    current.labels.push_back(cols[format.tag_column]);
  }
  flush();

  if (utterances.empty()) throw ArgumentError("empty corpus");
  return make_corpus(std::move(utterances), split);
}

Corpus read_bio_corpus(const std::string& path, Split split,
                       const ColumnFormat& format) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open corpus file " + path);
  return parse_bio_corpus(in, split, format);
}

void write_bio_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& u : corpus.utterances) {
    out << "# id=" << u.id << '\n';
    for (std::size_t i = 0; i < u.tokens.size(); ++i)
      out << u.tokens[i] << '\t' << u.labels[i] << '\n';
    out << '\n';
  }
}

void write_bio_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write corpus file " + path);
  write_bio_corpus(out, corpus);
}

Corpus sample_few_shot(const Corpus& corpus, std::size_t count,
                       std::uint64_t seed) {
  if (count == 0) throw ArgumentError("few-shot sample size must be positive");
  if (count > corpus.size())
    throw ArgumentError("few-shot sample size " + std::to_string(count) +
                        " exceeds corpus size " + std::to_string(corpus.size()));
  std::vector<std::size_t> all(corpus.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> picked;
  picked.reserve(count);
  std::mt19937_64 rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(picked), count, rng);

  Corpus out;
  out.ontology = corpus.ontology;
  out.split = corpus.split;
  out.utterances.reserve(count);
  for (auto i : picked) out.utterances.push_back(corpus.utterances[i]);
  return out;
}

nlohmann::json corpus_stats(const Corpus& corpus) {
  std::size_t tokens = 0;
  std::map<std::size_t, std::size_t> histogram;
  for (const auto& u : corpus.utterances) {
    tokens += u.size();
    std::size_t slots = 0;
    for (const auto& l : u.labels) slots += (l.size() > 1 && l[0] == 'B');
    ++histogram[slots];
  }
  nlohmann::json hist = nlohmann::json::object();
  for (auto [k, v] : histogram) hist[std::to_string(k)] = v;
  return {{"num_utterances", corpus.size()},
          {"num_tokens", tokens},
          {"slot_types", corpus.ontology.slot_types()},
          {"slots_per_utterance_histogram", hist}};
}

}  // namespace twosl
