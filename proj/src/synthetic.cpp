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

#include "twosl/synthetic.hpp"

#include <array>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace twosl {
namespace {

const std::map<std::string, std::vector<std::string>>& slot_values() {
  static const std::vector<std::string> kCities = {
      "boston",  "denver",   "chicago",        "new york",  "san francisco", "los angeles",
      "atlanta", "dallas",   "seattle",        "miami",     "salt lake city", "las vegas",
      "phoenix", "detroit",  "houston",        "orlando",   "baltimore",      "st. louis"};
  static const std::map<std::string, std::vector<std::string>> kValues = {
      {"dep", kCities},
      {"arr", kCities},
      {"air", {"delta", "united", "american airlines", "lufthansa", "air france", "jetblue",
               "alaska airlines", "southwest", "klm"}},
      {"day", {"monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday",
               "next friday", "tomorrow", "the weekend"}},
      {"time", {"morning", "afternoon", "evening", "early morning", "late night", "noon"}},
      {"cls", {"economy", "business class", "first class", "premium economy", "coach"}},
  };
  return kValues;
}

const std::map<std::string, std::string>& slot_types() {
  static const std::map<std::string, std::string> kTypes = {
      {"dep", "departure_city"}, {"arr", "arrival_city"}, {"air", "airline"},
      {"day", "day"},            {"time", "time_of_day"}, {"cls", "seat_class"}};
  return kTypes;
}

const std::vector<std::string>& templates() {
  static const std::vector<std::string> kTemplates = {
      "show me flights from {dep} to {arr}",
      "i need a flight from {dep} to {arr} on {day}",
      "book a {cls} ticket on {air} from {dep} to {arr}",
      "what {air} flights leave {dep} in the {time}",
      "are there any flights to {arr} on {day} in the {time}",
      "list {cls} fares from {dep}",
      "i want to fly {air} to {arr} on {day}",
      "find me a flight in the {time} from {dep} to {arr}",
      "please get me a {cls} seat to {arr}",
      "departing {dep} on {day} and going to {arr}",
      "i would like to leave {dep} in the {time} and arrive in {arr}",
      "does {air} have {cls} seats from {dep} to {arr}",
      "cheapest flight to {arr} with {air}",
      "show me the {time} flights to {arr} on {air}",
      "how much is a {cls} ticket from {dep} to {arr} on {day}",
      "what time does the {air} flight to {arr} depart",
      "my trip starts in {dep} and ends in {arr}",
      "is there anything leaving {dep} on {day}",
  };
  return kTemplates;
}

const std::vector<std::string>& prefixes() {
  static const std::vector<std::string> kPrefixes = {"", "", "", "please", "hi", "okay",
                                                     "could you", "hello there"};
  return kPrefixes;
}

const std::vector<std::string>& suffixes() {
  static const std::vector<std::string> kSuffixes = {"", "", "", "please", "thanks",
                                                     "for me", "if possible"};
  return kSuffixes;
}

void append_words(Utterance& u, const std::string& text, const std::string& type) {
  std::istringstream in(text);
  std::string word;
  bool first = true;
  while (in >> word) {
    u.tokens.push_back(word);
    u.labels.push_back(type.empty() ? "O" : (first ? "B-" : "I-") + type);
    first = false;
  }
}

Utterance render(std::mt19937_64& rng, const std::string& id) {
  auto pick = [&](const std::vector<std::string>& v) -> const std::string& {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  Utterance u;
  u.id = id;
  u.language = "en";
  append_words(u, pick(prefixes()), "");
  const std::string& tpl = pick(templates());
  std::string dep_city;
  std::size_t pos = 0;
  while (pos < tpl.size()) {
    const std::size_t open = tpl.find('{', pos);
    append_words(u, tpl.substr(pos, open - pos), "");
    if (open == std::string::npos) break;
    const std::size_t close = tpl.find('}', open);
    const std::string key = tpl.substr(open + 1, close - open - 1);
    std::string value = pick(slot_values().at(key));
    if (key == "dep") dep_city = value;
    // Avoid round trips to the same city.
    while (key == "arr" && value == dep_city) value = pick(slot_values().at(key));
    append_words(u, value, slot_types().at(key));
    pos = close + 1;
  }
  append_words(u, pick(suffixes()), "");
  return u;
}

}  // namespace

SyntheticSplits generate_synthetic_corpus(std::size_t train_size, std::size_t test_size,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto make = [&](std::size_t n, Split split) {
    std::vector<Utterance> utts;
    for (std::size_t i = 0; i < n; ++i) {
      std::ostringstream id;
      id << "syn-" << to_string(split) << "-" << std::setw(4) << std::setfill('0') << i;
      utts.push_back(render(rng, id.str()));
    }
    return make_corpus(std::move(utts), split);
  };
  SyntheticSplits out;
  out.train = make(train_size, Split::kTrain);
  out.test = make(test_size, Split::kTest);
  // Both splits share the full ontology even if a type is absent from one.
  const auto all = SlotOntology::merge(out.train.ontology, out.test.ontology);
  out.train.ontology = all;
  out.test.ontology = all;
  return out;
}

}  // namespace twosl
