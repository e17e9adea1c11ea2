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

#include "thingsyntax/analysis.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>

#include "thingsyntax/errors.h"

namespace thingsyntax {
namespace {

std::string format_double(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.6f", v);
  return buffer;
}

}  // namespace

PropertyDistribution property_distribution(std::span<const SyntaxMatrix> pool,
                                           Property property, int analysis_bins) {
  const int bins = property == Property::kColor ? kNumColors : analysis_bins;
  if (bins < 1) throw ConfigError("analysis bins must be positive");
  std::vector<double> counts(bins, 0.0);
  double n = 0.0;
  for (const auto& m : pool) {
    for (const auto& w : m.rows) {
      int bin = 0;
      if (property == Property::kColor) {
        bin = w.color;
      } else {
        bin = std::clamp(static_cast<int>(std::floor(w.value(property) * bins)), 0,
                         bins - 1);
      }
      counts[bin] += 1.0;
      n += 1.0;
    }
  }
  if (n == 0.0) {
    throw InsufficientData("property_distribution: empty window pool");
  }
  PropertyDistribution out;
  out.property = property;
  out.probs.resize(bins);
  for (int i = 0; i < bins; ++i) out.probs[i] = (counts[i] + 1.0) / (n + bins);
  return out;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw DimensionMismatch("kl_divergence: distributions have different lengths");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (!(q[i] > 0.0)) {
      throw InvalidInput("kl_divergence: Q is zero where P is positive");
    }
    sum += p[i] * std::log(p[i] / q[i]);
  }
  return std::max(sum, 0.0);
}

double kl_divergence(const PropertyDistribution& p, const PropertyDistribution& q) {
  if (p.property != q.property) {
    throw DimensionMismatch("kl_divergence: distributions of different properties");
  }
  return kl_divergence(p.probs, q.probs);
}

KlMatrix kl_matrix(const std::map<std::string, PropertyDistribution>& classes) {
  if (classes.size() < 2) {
    throw InvalidInput("kl_matrix needs at least two scene classes");
  }
  KlMatrix out;
  out.property = classes.begin()->second.property;
  for (const auto& [scene, dist] : classes) out.scenes.push_back(scene);
  const std::size_t n = out.scenes.size();
  out.values.assign(n, std::vector<double>(n, 0.0));
  out.max_pair.value = -std::numeric_limits<double>::infinity();
  out.min_pair.value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double v =
          kl_divergence(classes.at(out.scenes[i]), classes.at(out.scenes[j]));
      out.values[i][j] = v;
      if (v > out.max_pair.value) out.max_pair = {out.scenes[i], out.scenes[j], v};
      if (v < out.min_pair.value) out.min_pair = {out.scenes[i], out.scenes[j], v};
    }
  }
  return out;
}

double mean_kl(const std::map<std::string, PropertyDistribution>& p,
               const std::map<std::string, PropertyDistribution>& q) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& [scene, dist] : p) {
    const auto it = q.find(scene);
    if (it == q.end()) continue;
    sum += kl_divergence(dist, it->second);
    ++count;
  }
  if (count == 0) throw InvalidInput("mean_kl: no scene present on both sides");
  return sum / static_cast<double>(count);
}

std::string kl_matrix_csv(const KlMatrix& matrix) {
  std::string out = std::string(property_name(matrix.property));
  for (const auto& s : matrix.scenes) out += "," + s;
  out += "\n";
  for (std::size_t i = 0; i < matrix.scenes.size(); ++i) {
    out += matrix.scenes[i];
    for (double v : matrix.values[i]) out += "," + format_double(v);
    out += "\n";
  }
  out += "max," + matrix.max_pair.from + "," + matrix.max_pair.to + "," +
         format_double(matrix.max_pair.value) + "\n";
  out += "min," + matrix.min_pair.from + "," + matrix.min_pair.to + "," +
         format_double(matrix.min_pair.value) + "\n";
  return out;
}

NoiseTargets NoiseTargets::parse(std::string_view text) {
  if (text == "all") return all();
  if (text == "position") return {true, true, false, false};
  if (text == "size") return {false, false, true, true};
  NoiseTargets t = none();
  std::stringstream in{std::string(text)};
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == "x") {
      t.x = true;
    } else if (item == "y") {
      t.y = true;
    } else if (item == "width" || item == "w") {
      t.width = true;
    } else if (item == "height" || item == "h") {
      t.height = true;
    } else {
      throw ConfigError("unknown noise target '" + item + "'");
    }
  }
  return t;
}

std::string NoiseTargets::to_string() const {
  if (x && y && width && height) return "all";
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(x, "x");
  add(y, "y");
  add(width, "width");
  add(height, "height");
  return out.empty() ? "none" : out;
}

NoisyImage inject_noise(std::span<const RawBox> boxes, const ImageMeta& meta,
                        double sigma, std::uint64_t seed, NoiseTargets targets) {
  if (!(sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
  if (meta.width < 1 || meta.height < 1) {
    throw InvalidGeometry("image dimensions must be positive");
  }
  const double scale = kNoiseMaxDimension / std::max(meta.width, meta.height);
  NoisyImage out;
  out.meta = meta;
  out.meta.width = std::max(1, static_cast<int>(std::lround(meta.width * scale)));
  out.meta.height = std::max(1, static_cast<int>(std::lround(meta.height * scale)));
  const double image_w = out.meta.width;
  const double image_h = out.meta.height;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto perturb = [&](bool on) { return on && sigma > 0.0 ? sigma * noise(rng) : 0.0; };
  out.boxes.reserve(boxes.size());
  for (const RawBox& original : boxes) {
    RawBox box = original;
    box.x_min = original.x_min * scale + perturb(targets.x);
    box.y_min = original.y_min * scale + perturb(targets.y);
    box.width = std::max(1.0, original.width * scale + perturb(targets.width));
    box.height = std::max(1.0, original.height * scale + perturb(targets.height));
    if (sigma > 0.0) {
      box.x_min = std::clamp(box.x_min, 0.0, image_w - 1.0);
      box.y_min = std::clamp(box.y_min, 0.0, image_h - 1.0);
      box.width = std::min(box.width, image_w - box.x_min);
      box.height = std::min(box.height, image_h - box.y_min);
    }
    out.boxes.push_back(box);
  }
  return out;
}

PropertyMask restrict_properties(std::span<const Property> properties) {
  if (properties.empty()) throw ConfigError("property mask must not be empty");
  PropertyMask mask = PropertyMask::none();
  for (Property p : properties) mask = mask.with(p);
  return mask;
}

std::uint64_t cell_seed(std::uint64_t master, std::uint64_t cell) {
  // splitmix64 of the combined value.
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (cell + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace thingsyntax
