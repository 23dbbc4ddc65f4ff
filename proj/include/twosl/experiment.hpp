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
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "twosl/contrastive.hpp"
#include "twosl/corpus.hpp"
#include "twosl/encoder.hpp"
#include "twosl/pipeline.hpp"
#include "twosl/span_classifier.hpp"
#include "twosl/token_baseline.hpp"

namespace twosl {

struct ExperimentConfig {
  std::string language = "xx";
  std::filesystem::path train_path;
  std::filesystem::path test_path;
  ColumnFormat format;
  std::vector<std::size_t> sizes{50, 100, 200};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  // {"type": "toy", ...ToyEncoderConfig fields} or {"checkpoint": dir}.
  nlohmann::json encoder{{"type", "toy"}};
  Stage1Config stage1;
  Stage2Config stage2;
  PipelineConfig pipeline;
  std::vector<bool> with_cl{true, false};
  std::vector<bool> with_step1{true};
  bool run_baseline = false;
  TokenBaselineConfig baseline;
  // Optional source-language corpus fine-tuned on before the target sample.
  std::optional<std::filesystem::path> transfer_corpus;
  ColumnFormat transfer_format;
  bool export_projections = false;
  std::filesystem::path output_dir = "report";
};

// Relative paths are resolved against `base_dir`.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                             const std::filesystem::path& base_dir = {});

// Builds the base encoder described by an experiment's "encoder" entry.
std::unique_ptr<SentenceEncoder> make_encoder(const nlohmann::json& spec,
                                              const std::filesystem::path& base_dir = {});

struct CellResult {
  std::string cell;
  nlohmann::json metrics;
  bool reused = false;  // already complete on disk
};

struct ExperimentReport {
  std::vector<CellResult> cells;
  nlohmann::json summary;
};

// Runs every (M, seed, ablation) cell, writing report/<cell>/metrics.json
// atomically, then report/summary.csv and report/summary.json. Cells whose
// metrics already exist with status "ok" are not recomputed. A failing cell
// is recorded with status "failed" and the run continues.
ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                const std::function<void(const std::string&)>& progress = {});

std::string cell_name(std::size_t m, std::uint64_t seed, bool with_cl, bool with_step1);
std::string baseline_cell_name(std::size_t m, std::uint64_t seed);

struct LanguageBench {
  std::string language;
  std::size_t utterances = 0;
  std::size_t step2_invocations_with_filter = 0;
  std::size_t step2_invocations_without_filter = 0;
  double wall_time_with = 0.0;  // seconds
  double wall_time_without = 0.0;
  double f1_with = 0.0;
  double f1_without = 0.0;
  // Utterances where filtering invoked Step 2 more often than no filtering.
  std::size_t count_violations = 0;
};

struct BenchReport {
  std::vector<LanguageBench> languages;
};

nlohmann::json to_json(const BenchReport& report);

// Runs the pipeline with filtering (step1 + step2_with) and without it
// (step2_without, trained with a NONE class) on every test utterance.
BenchReport bench_filtering(const SentenceEncoder& encoder, const SpanClassifier& step1,
                            const SpanClassifier& step2_with, const SpanClassifier& step2_without,
                            const Corpus& test, const PipelineConfig& cfg);

// Maps n x d points to n x 2; the seed is passed through to the projector.
using Projector = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&, std::uint64_t)>;

// Projection onto the top two principal components (seed unused).
Eigen::MatrixXd pca_projection(const Eigen::MatrixXd& points, std::uint64_t seed);

// Writes a "x,y,label" CSV with one row per point.
void export_projection(const Eigen::MatrixXd& vectors, const std::vector<std::string>& labels,
                       const Projector& projector, std::uint64_t seed,
                       const std::filesystem::path& path);

}  // namespace twosl
