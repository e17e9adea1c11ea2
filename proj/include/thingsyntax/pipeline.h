/*
 * Copyright 2026 The thingsyntax Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// End-to-end retrieval over a corpus: fitting the holdout models, building
// profiles, scoring every image per scene, and the parameter sweeps built on
// top of it.

#ifndef THINGSYNTAX_PIPELINE_H_
#define THINGSYNTAX_PIPELINE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thingsyntax/analysis.h"
#include "thingsyntax/core.h"
#include "thingsyntax/encoder.h"
#include "thingsyntax/grammar.h"
#include "thingsyntax/io.h"
#include "thingsyntax/retrieval.h"

namespace thingsyntax {

struct RetrievalConfig {
  int bins = 3;
  int components = 1024;
  std::uint64_t seed = 0;
  double alpha = 1.0;
  PropertyMask mask;
  DapVariant dap = DapVariant::kSoft;
  FusionMethod fusion = FusionMethod::kMinMaxAverage;
  FvOptions fv;
  GmmOptions gmm;  // gmm.mask is replaced by `mask`
};

enum class QueryMode { kStatements, kBlocks, kFused };

std::string_view query_mode_name(QueryMode mode);
QueryMode query_mode_from_name(std::string_view name);

// Mean color feature of the holdout windows; stands in for an "any" color in
// Fisher-vector queries.
double mean_color_feature(std::span<const SyntaxMatrix> holdout);

// Boundaries fitted on the holdout and the statement prior estimated from
// the holdout histogram under them.
struct StatementModels {
  BinBoundaries boundaries;
  PriorModel prior;
};

StatementModels fit_statement_models(std::span<const SyntaxMatrix> holdout,
                                     const RetrievalConfig& config);
GmmModel fit_block_model(std::span<const SyntaxMatrix> holdout,
                         const RetrievalConfig& config);

using SceneScores = std::map<std::string, ScoreMap>;
using SceneRankings = std::map<std::string, RankedList>;

// Per profile, the DAP score of every image.
SceneScores score_statements(std::span<const SyntaxMatrix> images,
                             std::span<const SceneProfile> profiles,
                             const StatementModels& models,
                             const RetrievalConfig& config);

// Per profile, the negated Fisher-vector distance of every image.
SceneScores score_blocks(std::span<const SyntaxMatrix> images,
                         std::span<const SceneProfile> profiles,
                         const GmmModel& model, const RetrievalConfig& config);

SceneRankings rank_scenes(const SceneScores& scores);
SceneRankings fuse_scenes(const SceneScores& a, const SceneScores& b,
                          FusionMethod method);

// Rendered statements of each scene's annotated windows, as used for
// statement profiles built from annotations.
std::map<std::string, std::vector<std::string>> statements_from_annotations(
    std::span<const SyntaxMatrix> annotations,
    const std::map<std::string, std::string>& labels,
    const BinBoundaries& boundaries);

std::vector<SceneProfile> statement_profiles(
    const std::map<std::string, std::vector<std::string>>& statements,
    int bins, const PropertyMask& mask);

std::vector<SceneProfile> block_profiles(
    const std::map<std::string, std::vector<BlockIllustration>>& illustrations,
    const GmmModel& model, const FvOptions& options, double any_color_feature);

// Per scene, the annotated windows of all its images merged into one
// Fisher-vector profile.
std::vector<SceneProfile> block_profiles_from_annotations(
    std::span<const SyntaxMatrix> annotations,
    const std::map<std::string, std::string>& labels, const GmmModel& model,
    const FvOptions& options);

// Holdout, labeled test corpus, and labeled annotations that sweeps turn into
// scene queries.
struct Experiment {
  std::vector<SyntaxMatrix> holdout;
  std::vector<SyntaxMatrix> test;
  std::map<std::string, std::string> labels;  // test and annotation ids
  std::vector<WindowsRecord> annotations;
  RetrievalConfig config;

  static Experiment from_records(std::span<const WindowsRecord> holdout,
                                 std::span<const WindowsRecord> test,
                                 std::span<const WindowsRecord> annotations,
                                 const RetrievalConfig& config);
};

struct SweepRow {
  std::string sweep;     // bins | gmm | noise | property
  std::string mode;      // statements | blocks | fused
  std::string property;  // mask
  std::string targets;   // noise targets
  int bins = 0;
  int components = 0;
  double sigma = 0.0;
  std::string color_source;  // label | pixels
  double map = 0.0;
};

// MAP of querying the test corpus with profiles built from the (optionally
// noise-injected) annotations.
double annotation_retrieval_map(const Experiment& experiment, QueryMode mode,
                                int bins, int components, const PropertyMask& mask,
                                double sigma, NoiseTargets targets,
                                std::uint64_t seed);

std::vector<SweepRow> sweep_bins(const Experiment& experiment,
                                 std::span<const int> bin_counts);
std::vector<SweepRow> sweep_components(const Experiment& experiment,
                                       std::span<const int> component_counts);
// One row per sigma (a sigma of 0 gives the clean baseline) and target.
std::vector<SweepRow> sweep_noise(const Experiment& experiment, QueryMode mode,
                                  std::span<const double> sigmas,
                                  std::span<const NoiseTargets> targets);
// One row per single property plus one for the full mask.
std::vector<SweepRow> sweep_properties(const Experiment& experiment,
                                       QueryMode mode);

std::string sweep_csv(std::span<const SweepRow> rows);

}  // namespace thingsyntax

#endif  // THINGSYNTAX_PIPELINE_H_
