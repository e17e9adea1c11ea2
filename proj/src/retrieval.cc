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

#include "thingsyntax/retrieval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "thingsyntax/errors.h"

namespace thingsyntax {
namespace {

constexpr double kFusionRrfK = 60.0;
constexpr double kGeometrySlack = 1e-9;

void check_histogram_shape(const StatementHistogram& h, int bins,
                           const PropertyMask& mask, std::size_t dimension) {
  if (h.bins != bins || !(h.mask == mask) || h.dimension() != dimension) {
    throw DimensionMismatch(
        "histogram has B=" + std::to_string(h.bins) + " over " +
        h.mask.to_string() + " (" + std::to_string(h.dimension()) +
        " bins), expected B=" + std::to_string(bins) + " over " +
        mask.to_string() + " (" + std::to_string(dimension) + " bins)");
  }
}

std::string format_double(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.6f", v);
  return buffer;
}

}  // namespace

std::string_view profile_kind_name(ProfileKind kind) {
  return kind == ProfileKind::kStatementHistogram ? "statement-histogram"
                                                  : "fisher-vector";
}

ProfileKind profile_kind_from_name(std::string_view name) {
  if (name == "statement-histogram" || name == "statements") {
    return ProfileKind::kStatementHistogram;
  }
  if (name == "fisher-vector" || name == "blocks") {
    return ProfileKind::kFisherVector;
  }
  throw ConfigError("unknown profile kind '" + std::string(name) + "'");
}

void validate_block(const Block& b) {
  const bool finite = std::isfinite(b.x) && std::isfinite(b.y) &&
                      std::isfinite(b.w) && std::isfinite(b.h);
  if (!finite || b.x < 0.0 || b.y < 0.0 || !(b.w > 0.0) || !(b.h > 0.0) ||
      b.x + b.w > 1.0 + kGeometrySlack || b.y + b.h > 1.0 + kGeometrySlack) {
    throw InvalidGeometry(
        "block must satisfy x,y >= 0, w,h > 0, x+w <= 1 and y+h <= 1");
  }
  if (b.color != Statement::kAnyColor && (b.color < 0 || b.color >= kNumColors)) {
    throw InvalidInput("block color index " + std::to_string(b.color) +
                       " is out of range");
  }
}

ThingWindow block_to_window(const Block& block, double any_color_feature) {
  validate_block(block);
  ThingWindow w;
  w.x = block.x + block.w / 2;
  w.y = block.y + block.h / 2;
  w.size = block.w * block.h;
  w.ratio = aspect_ratio(block.w, block.h);
  if (block.color == Statement::kAnyColor) {
    // Nearest color index to the requested feature value; the exact value is
    // used by merge_illustrations through the feature override below.
    w.color = static_cast<int>(std::lround(any_color_feature * 10.0));
  } else {
    w.color = block.color;
  }
  return w;
}

SyntaxMatrix merge_illustrations(std::span<const BlockIllustration> illustrations,
                                 double any_color_feature) {
  SyntaxMatrix merged;
  merged.image_id = "illustration";
  for (const auto& illustration : illustrations) {
    for (const auto& block : illustration) {
      merged.rows.push_back(block_to_window(block, any_color_feature));
    }
  }
  return merged;
}

SceneProfile build_statement_profile(std::string scene_id,
                                     std::span<const std::string> statements,
                                     int bins, const PropertyMask& mask) {
  if (statements.empty()) {
    throw InvalidInput("scene '" + scene_id + "': no statements");
  }
  SceneProfile profile;
  profile.scene_id = std::move(scene_id);
  profile.kind = ProfileKind::kStatementHistogram;
  profile.histogram = histogram_from_statements(statements, bins, mask);
  const double total = profile.histogram.total();
  for (double& c : profile.histogram.counts) c /= total;
  return profile;
}

SceneProfile build_block_profile(std::string scene_id,
                                 std::span<const BlockIllustration> illustrations,
                                 const GmmModel& model, const FvOptions& options,
                                 double any_color_feature) {
  std::size_t blocks = 0;
  for (const auto& i : illustrations) blocks += i.size();
  if (blocks == 0) {
    throw InvalidInput("scene '" + scene_id + "': no blocks");
  }
  // Feature rows are built directly so an "any" color keeps its exact
  // feature value instead of a rounded color index.
  std::vector<std::vector<double>> points;
  points.reserve(blocks);
  for (const auto& illustration : illustrations) {
    for (const auto& block : illustration) {
      const ThingWindow w = block_to_window(block, any_color_feature);
      auto row = w.features(model.mask);
      if (block.color == Statement::kAnyColor &&
          model.mask.contains(Property::kColor)) {
        row.back() = any_color_feature;
      }
      points.push_back(std::move(row));
    }
  }
  SceneProfile profile;
  profile.scene_id = std::move(scene_id);
  profile.kind = ProfileKind::kFisherVector;
  profile.fisher = encode_fv(points, model, options);
  profile.components = model.components;
  return profile;
}

std::vector<double> smoothed_distribution(const StatementHistogram& histogram,
                                          double alpha) {
  if (!(alpha > 0.0)) throw ConfigError("smoothing alpha must be positive");
  const double denominator =
      histogram.total() + alpha * static_cast<double>(histogram.dimension());
  std::vector<double> out(histogram.dimension());
  for (std::size_t m = 0; m < out.size(); ++m) {
    out[m] = (histogram.counts[m] + alpha) / denominator;
  }
  return out;
}

PriorModel estimate_prior(const StatementHistogram& holdout, double alpha) {
  PriorModel prior;
  prior.bins = holdout.bins;
  prior.mask = holdout.mask;
  prior.alpha = alpha;
  prior.probs = smoothed_distribution(holdout, alpha);
  return prior;
}

PriorModel uniform_prior(int bins, const PropertyMask& mask, double alpha) {
  return estimate_prior(StatementHistogram(bins, mask), alpha);
}

double dap_score(const StatementHistogram& image, const SceneProfile& profile,
                 const PriorModel& prior, DapVariant variant) {
  if (profile.kind != ProfileKind::kStatementHistogram) {
    throw ConfigError("dap_score needs a statement-histogram profile");
  }
  const StatementHistogram& q = profile.histogram;
  check_histogram_shape(image, q.bins, q.mask, q.dimension());
  if (prior.bins != q.bins || !(prior.mask == q.mask) ||
      prior.probs.size() != q.dimension()) {
    throw DimensionMismatch("prior does not match the profile's statement space");
  }
  const auto p_x = smoothed_distribution(image, prior.alpha);
  double score = 0.0;
  for (std::size_t m = 0; m < p_x.size(); ++m) {
    const double p = prior.probs[m];
    if (variant == DapVariant::kSoft) {
      if (q.counts[m] != 0.0) {
        score += q.counts[m] * (std::log(p_x[m]) - std::log(p));
      }
    } else if (q.counts[m] > 0.0) {
      score += std::log(p_x[m]) - std::log(p);
    } else {
      score += std::log1p(-p_x[m]) - std::log1p(-p);
    }
  }
  return score;
}

double fv_distance_score(const FisherVector& image, const SceneProfile& profile) {
  if (profile.kind != ProfileKind::kFisherVector) {
    throw ConfigError("fv_distance_score needs a fisher-vector profile");
  }
  if (image.size() != profile.fisher.size()) {
    throw DimensionMismatch("Fisher vector lengths differ: " +
                            std::to_string(image.size()) + " vs " +
                            std::to_string(profile.fisher.size()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double d = image.values[i] - profile.fisher.values[i];
    sum += d * d;
  }
  return -std::sqrt(sum);
}

RankedList rank_images(const ScoreMap& scores) {
  RankedList out;
  out.reserve(scores.size());
  for (const auto& [id, score] : scores) {
    if (!std::isfinite(score)) {
      throw InvalidInput("image '" + id + "' has a non-finite score");
    }
    out.push_back({id, score});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const RankedItem& a, const RankedItem& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.image_id < b.image_id;
                   });
  return out;
}

RankedList fuse_rankings(const ScoreMap& a, const ScoreMap& b,
                         FusionMethod method) {
  if (a.size() != b.size() ||
      !std::equal(a.begin(), a.end(), b.begin(),
                  [](const auto& x, const auto& y) { return x.first == y.first; })) {
    throw InvalidInput("fuse_rankings: the two score sets cover different images");
  }
  ScoreMap fused;
  if (method == FusionMethod::kReciprocalRank) {
    for (const RankedList& list : {rank_images(a), rank_images(b)}) {
      for (std::size_t r = 0; r < list.size(); ++r) {
        fused[list[r].image_id] += 1.0 / (kFusionRrfK + r + 1);
      }
    }
    return rank_images(fused);
  }
  auto normalized = [](const ScoreMap& scores) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& [id, s] : scores) {
      if (!std::isfinite(s)) {
        throw InvalidInput("image '" + id + "' has a non-finite score");
      }
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    ScoreMap out;
    for (const auto& [id, s] : scores) {
      out[id] = hi > lo ? (s - lo) / (hi - lo) : 0.5;
    }
    return out;
  };
  const ScoreMap na = normalized(a);
  const ScoreMap nb = normalized(b);
  for (const auto& [id, s] : na) fused[id] = 0.5 * (s + nb.at(id));
  return rank_images(fused);
}

double average_precision(const RankedList& ranked,
                         const std::set<std::string>& relevant) {
  if (relevant.empty()) throw InvalidInput("average_precision: no relevant images");
  double hits = 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    if (relevant.count(ranked[k].image_id) != 0) {
      hits += 1.0;
      sum += hits / static_cast<double>(k + 1);
    }
  }
  if (hits != static_cast<double>(relevant.size())) {
    throw InvalidInput("average_precision: relevant images missing from ranking");
  }
  return sum / static_cast<double>(relevant.size());
}

double mean_average_precision(std::span<const double> aps) {
  if (aps.empty()) return 0.0;
  double sum = 0.0;
  for (double ap : aps) sum += ap;
  return sum / static_cast<double>(aps.size());
}

Evaluation evaluate(const std::map<std::string, RankedList>& rankings,
                    const std::map<std::string, std::string>& labels) {
  Evaluation evaluation;
  std::vector<double> aps;
  for (const auto& [scene, ranked] : rankings) {
    std::set<std::string> relevant;
    for (const auto& item : ranked) {
      const auto it = labels.find(item.image_id);
      if (it != labels.end() && it->second == scene) relevant.insert(item.image_id);
    }
    if (relevant.empty()) {
      throw InvalidInput("scene '" + scene + "' has no relevant image in its pool");
    }
    const double ap = average_precision(ranked, relevant);
    evaluation.rows.push_back({scene, ap});
    aps.push_back(ap);
  }
  evaluation.map = mean_average_precision(aps);
  return evaluation;
}

std::string evaluation_csv(const Evaluation& evaluation) {
  std::string out = "scene_id,AP\n";
  for (const auto& row : evaluation.rows) {
    out += row.scene_id + "," + format_double(row.ap) + "\n";
  }
  out += "MAP," + format_double(evaluation.map) + "\n";
  return out;
}

}  // namespace thingsyntax
