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
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace twosl {

struct F1Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  double precision() const;
  double recall() const;
  double f1() const;
};

// Token-level micro-F1 over non-O tags: a token is a true positive iff the
// gold tag is not O and the predicted tag equals it exactly.
struct F1Report {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::map<std::string, F1Counts> per_type;
};

nlohmann::json to_json(const F1Report& report);

F1Report token_micro_f1(const std::vector<std::vector<std::string>>& gold,
                        const std::vector<std::vector<std::string>>& pred);

// Mean silhouette with cosine distance; points are the rows of `vectors`.
// Points in singleton clusters contribute 0. Requires at least 2 clusters.
double silhouette_score(const Eigen::MatrixXd& vectors, const std::vector<std::string>& labels);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single value
};
MeanStd mean_std(const std::vector<double>& values);

}  // namespace twosl
