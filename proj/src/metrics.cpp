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

#include "twosl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "twosl/contrastive.hpp"
#include "twosl/corpus.hpp"
#include "twosl/error.hpp"

namespace twosl {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

std::string type_of(const std::string& tag) {
  const auto parsed = parse_tag(tag);
  return parsed ? parsed->type : tag;
}

}  // namespace

double F1Counts::precision() const { return ratio(tp, tp + fp); }
double F1Counts::recall() const { return ratio(tp, tp + fn); }
double F1Counts::f1() const { return harmonic(precision(), recall()); }

nlohmann::json to_json(const F1Report& r) {
  nlohmann::json per_type = nlohmann::json::object();
  for (const auto& [type, c] : r.per_type)
    per_type[type] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"f1", c.f1()}};
  return {{"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1},
          {"tp", r.tp},               {"fp", r.fp},         {"fn", r.fn},
          {"per_type", per_type}};
}

F1Report token_micro_f1(const std::vector<std::vector<std::string>>& gold,
                        const std::vector<std::vector<std::string>>& pred) {
  if (gold.size() != pred.size())
    throw ArgumentError("gold has " + std::to_string(gold.size()) + " sequences, predictions " +
                        std::to_string(pred.size()));
  F1Report r;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != pred[s].size())
      throw ArgumentError("sequence " + std::to_string(s) + ": gold length " +
                          std::to_string(gold[s].size()) + " != predicted length " +
                          std::to_string(pred[s].size()));
    for (std::size_t i = 0; i < gold[s].size(); ++i) {
      const auto& g = gold[s][i];
      const auto& p = pred[s][i];
      if (g != "O" && g == p) {
        ++r.tp;
        ++r.per_type[type_of(g)].tp;
        continue;
      }
      if (p != "O") {
        ++r.fp;
        ++r.per_type[type_of(p)].fp;
      }
      if (g != "O") {
        ++r.fn;
        ++r.per_type[type_of(g)].fn;
      }
    }
  }
  r.precision = ratio(r.tp, r.tp + r.fp);
  r.recall = ratio(r.tp, r.tp + r.fn);
  r.f1 = harmonic(r.precision, r.recall);
  return r;
}

double silhouette_score(const Eigen::MatrixXd& vectors, const std::vector<std::string>& labels) {
  const auto n = static_cast<std::size_t>(vectors.rows());
  if (labels.size() != n) throw ArgumentError("silhouette: label count does not match points");
  std::map<std::string, std::size_t> cluster_id;
  for (const auto& l : labels) cluster_id.emplace(l, cluster_id.size());
  if (cluster_id.size() < 2) throw ArgumentError("silhouette is undefined for a single cluster");
  const std::size_t k = cluster_id.size();
  std::vector<std::size_t> cluster(n), cluster_size(k, 0);
  for (std::size_t i = 0; i < n; ++i) ++cluster_size[cluster[i] = cluster_id[labels[i]]];

  // Normalised rows make cosine distance a dot product.
  Eigen::MatrixXd unit = vectors;
  for (Eigen::Index r = 0; r < unit.rows(); ++r) {
    const double norm = unit.row(r).norm();
    if (norm > 0.0) unit.row(r) /= norm;
  }
  const Eigen::MatrixXd sim = unit * unit.transpose();

  double total = 0.0;
  std::vector<double> sums(k);
  for (std::size_t i = 0; i < n; ++i) {
    if (cluster_size[cluster[i]] == 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    const bool zero_i = vectors.row(i).norm() == 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const bool zero = zero_i || vectors.row(j).norm() == 0.0;
      sums[cluster[j]] += zero ? 1.0 : 1.0 - sim(i, j);
    }
    const double a = sums[cluster[i]] / static_cast<double>(cluster_size[cluster[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c)
      if (c != cluster[i]) b = std::min(b, sums[c] / static_cast<double>(cluster_size[c]));
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

}  // namespace twosl
