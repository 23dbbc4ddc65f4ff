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

#include "twosl/corpus.hpp"

namespace twosl {

struct SyntheticSplits {
  Corpus train;
  Corpus test;
};

// Templated flight-booking utterances over six slot types (departure_city,
// arrival_city, airline, day, time_of_day, seat_class). Departure and arrival
// cities share one value list, so only context tells them apart.
SyntheticSplits generate_synthetic_corpus(std::size_t train_size, std::size_t test_size,
                                          std::uint64_t seed);

}  // namespace twosl
