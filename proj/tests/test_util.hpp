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


#ifndef TWOSL_TESTS_TEST_UTIL_HPP_
#define TWOSL_TESTS_TEST_UTIL_HPP_

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "twosl/corpus.hpp"

namespace testutil {

inline std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

inline twosl::Utterance utt(const std::string& id, const std::string& tokens,
                            const std::string& labels) {
  return {id, "en", words(tokens), words(labels)};
}

// Valid BIO utterances over `num_types` types t0..t{n-1}.
inline std::vector<twosl::Utterance> random_utterances(std::mt19937_64& rng, std::size_t count,
                                                       std::size_t max_len, std::size_t num_types,
                                                       std::size_t max_slot_len = 4) {
  std::uniform_int_distribution<std::size_t> len_dist(1, max_len);
  std::uniform_int_distribution<std::size_t> type_dist(0, num_types - 1);
  std::uniform_int_distribution<std::size_t> slot_len(1, max_slot_len);
  std::uniform_int_distribution<int> vocab(0, 40);
  std::bernoulli_distribution opens(0.3);
  std::vector<twosl::Utterance> out;
  for (std::size_t u = 0; u < count; ++u) {
    twosl::Utterance x;
    x.id = "u" + std::to_string(u);
    x.language = "en";
    const std::size_t n = len_dist(rng);
    while (x.tokens.size() < n) {
      if (opens(rng)) {
        const std::string type = "t" + std::to_string(type_dist(rng));
        const std::size_t l = std::min(slot_len(rng), n - x.tokens.size());
        for (std::size_t k = 0; k < l; ++k) {
          x.tokens.push_back(type + "w" + std::to_string(vocab(rng)));
          x.labels.push_back((k == 0 ? "B-" : "I-") + type);
        }
      } else {
        x.tokens.push_back("w" + std::to_string(vocab(rng)));
        x.labels.push_back("O");
      }
    }
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace testutil

#endif  // TWOSL_TESTS_TEST_UTIL_HPP_
