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

// Per-property distributions, KL divergence reports, noise injection and
// property restriction.

#ifndef THINGSYNTAX_ANALYSIS_H_
#define THINGSYNTAX_ANALYSIS_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "thingsyntax/core.h"

namespace thingsyntax {

inline constexpr int kDefaultAnalysisBins = 10;

struct PropertyDistribution {
  Property property = Property::kHorizontal;
  std::vector<double> probs;
};

// Pooled values of `property` over all windows, binned uniformly on [0,1]
// (color: one bin per color), add-one smoothed and normalized. Throws
// InsufficientData on an empty pool.
PropertyDistribution property_distribution(std::span<const SyntaxMatrix> pool,
                                           Property property,
                                           int analysis_bins = kDefaultAnalysisBins);

// sum_i P(i) ln(P(i)/Q(i)), with 0 ln 0 = 0. Throws DimensionMismatch for
// different properties or lengths and InvalidInput when Q(i) = 0 < P(i).
double kl_divergence(const PropertyDistribution& p, const PropertyDistribution& q);
double kl_divergence(std::span<const double> p, std::span<const double> q);

struct KlPair {
  std::string from;
  std::string to;
  double value = 0.0;
};

struct KlMatrix {
  Property property = Property::kHorizontal;
  std::vector<std::string> scenes;      // row/column order
  std::vector<std::vector<double>> values;  // values[i][j] = D(P_i || P_j)
  KlPair max_pair;
  KlPair min_pair;
};

// Pairwise divergences between scene classes. Throws InvalidInput for fewer
// than two classes.
KlMatrix kl_matrix(const std::map<std::string, PropertyDistribution>& classes);

// Mean over scenes of D(P_scene || Q_scene), e.g. proposals against
// annotations. Scenes missing from either side are skipped.
double mean_kl(const std::map<std::string, PropertyDistribution>& p,
               const std::map<std::string, PropertyDistribution>& q);

// CSV: header row of scenes, one row per scene, then "max,<from>,<to>,<v>"
// and "min,..." annotation rows.
std::string kl_matrix_csv(const KlMatrix& matrix);

// Perturbed box fields.
struct NoiseTargets {
  bool x = true;
  bool y = true;
  bool width = true;
  bool height = true;

  static NoiseTargets all() { return {}; }
  static NoiseTargets none() { return {false, false, false, false}; }
  // "all", "position", "size", or a comma list of x, y, width, height.
  static NoiseTargets parse(std::string_view text);
  std::string to_string() const;
};

// Default grid of pixel standard deviations.
inline constexpr std::array<double, 7> kNoiseGrid = {2, 4, 6, 8, 10, 15, 20};

inline constexpr double kNoiseMaxDimension = 320.0;

struct NoisyImage {
  ImageMeta meta;
  std::vector<RawBox> boxes;
};

// Rescales the image so its larger side is 320 px, adds N(0, sigma) to the
// targeted fields of every box, floors width and height at 1 px and clips to
// the image. Deterministic in `seed`.
NoisyImage inject_noise(std::span<const RawBox> boxes, const ImageMeta& meta,
                        double sigma, std::uint64_t seed,
                        NoiseTargets targets = NoiseTargets::all());

// Mask for an ablation over `properties`; ConfigError when empty.
PropertyMask restrict_properties(std::span<const Property> properties);

// Seed of grid cell `cell` derived from a master seed.
std::uint64_t cell_seed(std::uint64_t master, std::uint64_t cell);

}  // namespace thingsyntax

#endif  // THINGSYNTAX_ANALYSIS_H_
