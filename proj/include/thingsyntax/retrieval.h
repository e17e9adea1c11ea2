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

// Example-free scene profiles, scoring, ranking, fusion and average
// precision.

#ifndef THINGSYNTAX_RETRIEVAL_H_
#define THINGSYNTAX_RETRIEVAL_H_

#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "thingsyntax/core.h"
#include "thingsyntax/encoder.h"
#include "thingsyntax/grammar.h"

namespace thingsyntax {

enum class ProfileKind { kStatementHistogram, kFisherVector };

std::string_view profile_kind_name(ProfileKind kind);
ProfileKind profile_kind_from_name(std::string_view name);

struct SceneProfile {
  std::string scene_id;
  ProfileKind kind = ProfileKind::kStatementHistogram;
  // L1-normalized for histogram profiles.
  StatementHistogram histogram;
  FisherVector fisher;
  // Component count of the model the Fisher payload was encoded with.
  int components = 0;

  bool operator==(const SceneProfile&) const = default;
};

// A block of an illustration, in normalized image coordinates. Color is a
// color index or Statement::kAnyColor.
struct Block {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
  int color = 0;
};

using BlockIllustration = std::vector<Block>;

// Checks 0 <= x, y; w, h > 0; x + w <= 1; y + h <= 1 (with 1e-9 slack).
// Throws InvalidGeometry.
void validate_block(const Block& block);

// Window of a normalized block. `any_color_feature` is the value used for
// the color column when the block color is "any".
ThingWindow block_to_window(const Block& block, double any_color_feature = 0.5);

// Rows of all illustrations stacked into one syntax matrix.
SyntaxMatrix merge_illustrations(std::span<const BlockIllustration> illustrations,
                                 double any_color_feature = 0.5);

SceneProfile build_statement_profile(std::string scene_id,
                                     std::span<const std::string> statements,
                                     int bins, const PropertyMask& mask = {});

SceneProfile build_block_profile(std::string scene_id,
                                 std::span<const BlockIllustration> illustrations,
                                 const GmmModel& model,
                                 const FvOptions& options = {},
                                 double any_color_feature = 0.5);

// Statement priors p(a_m), Laplace-smoothed.
struct PriorModel {
  int bins = 3;
  PropertyMask mask;
  double alpha = 1.0;
  std::vector<double> probs;

  bool operator==(const PriorModel&) const = default;
};

// (counts + alpha) / (total + alpha * D) from a histogram over the holdout.
PriorModel estimate_prior(const StatementHistogram& holdout, double alpha = 1.0);
PriorModel uniform_prior(int bins, const PropertyMask& mask = {},
                         double alpha = 1.0);

// Laplace-smoothed, L1-normalized copy of `histogram`.
std::vector<double> smoothed_distribution(const StatementHistogram& histogram,
                                          double alpha);

enum class DapVariant {
  // sum_m q(m) * (log p_x(m) - log p(m))
  kSoft,
  // Binary attributes a_m = [q(m) > 0] with the usual DAP product:
  // sum_m a_m log(p_x/p) + (1 - a_m) log((1 - p_x)/(1 - p)).
  kBinary,
};

double dap_score(const StatementHistogram& image, const SceneProfile& profile,
                 const PriorModel& prior, DapVariant variant = DapVariant::kSoft);

// Negated Euclidean distance between the two Fisher vectors.
double fv_distance_score(const FisherVector& image, const SceneProfile& profile);

struct RankedItem {
  std::string image_id;
  double score = 0.0;

  bool operator==(const RankedItem&) const = default;
};

using RankedList = std::vector<RankedItem>;
using ScoreMap = std::map<std::string, double>;

// Descending score, ties by ascending image id. Throws InvalidInput naming
// the first image with a non-finite score.
RankedList rank_images(const ScoreMap& scores);

enum class FusionMethod {
  kMinMaxAverage,
  kReciprocalRank,
};

// Min-max normalizes each score set (a constant set maps to 0.5) and
// averages; or reciprocal-rank fusion with k = 60. Throws InvalidInput when
// the image sets differ.
RankedList fuse_rankings(const ScoreMap& a, const ScoreMap& b,
                         FusionMethod method = FusionMethod::kMinMaxAverage);

// (1/|R|) * sum over relevant hit ranks k of hits_up_to_k / k. Throws
// InvalidInput for an empty relevance set or relevant ids missing from the
// ranking.
double average_precision(const RankedList& ranked,
                         const std::set<std::string>& relevant);

struct EvaluationRow {
  std::string scene_id;
  double ap = 0.0;
};

struct Evaluation {
  std::vector<EvaluationRow> rows;
  double map = 0.0;
};

// Per scene, the AP of its ranking against the images carrying its label.
Evaluation evaluate(const std::map<std::string, RankedList>& rankings,
                    const std::map<std::string, std::string>& labels);

double mean_average_precision(std::span<const double> aps);

// "scene_id,AP" rows then a "MAP,<value>" row.
std::string evaluation_csv(const Evaluation& evaluation);

}  // namespace thingsyntax

#endif  // THINGSYNTAX_RETRIEVAL_H_
