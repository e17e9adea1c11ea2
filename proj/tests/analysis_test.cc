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

#include <cmath>
#include <random>

#include "doctest.h"
#include "thingsyntax/analysis.h"
#include "thingsyntax/errors.h"
#include "thingsyntax/grammar.h"
#include "thingsyntax/io.h"

using namespace thingsyntax;

namespace {

SyntaxMatrix uniform_pool(std::mt19937_64& rng, std::size_t n, double x_shift = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SyntaxMatrix m{"p", {}};
  for (std::size_t i = 0; i < n; ++i) {
    m.rows.push_back({std::min(u(rng) * (1 - x_shift) + x_shift, 1.0), u(rng),
                      u(rng), std::min(u(rng), 0.99), static_cast<int>(rng() % 11)});
  }
  return m;
}

double direct_kl(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * std::log(p[i] / q[i]);
  return s;
}

}  // namespace

TEST_CASE("property distribution concentrates on a constant value") {
  SyntaxMatrix m{"c", std::vector<ThingWindow>(100, ThingWindow{0.5, 0.2, 0.3, 0.5, 2})};
  std::vector<SyntaxMatrix> pool{m};
  const auto d = property_distribution(pool, Property::kHorizontal);
  CHECK(d.probs.size() == 10);
  CHECK(std::max_element(d.probs.begin(), d.probs.end()) - d.probs.begin() == 5);
  CHECK(d.probs[5] == doctest::Approx(101.0 / 110));
  CHECK(property_distribution(pool, Property::kColor).probs.size() == 11);
  CHECK_THROWS_AS(property_distribution(std::span<const SyntaxMatrix>{}, Property::kSize),
                  InsufficientData);
}

TEST_CASE("property distribution matches direct counting") {
  std::mt19937_64 rng(1);
  std::vector<SyntaxMatrix> pool{uniform_pool(rng, 5000), uniform_pool(rng, 300, 0.5)};
  for (Property p : kAllProperties) {
    const int bins = p == Property::kColor ? 11 : 10;
    std::vector<double> counts(bins, 0.0);
    double n = 0.0;
    for (const auto& m : pool) {
      for (const auto& w : m.rows) {
        int b = p == Property::kColor ? w.color : 0;
        if (p != Property::kColor) {
          while (b + 1 < bins && w.value(p) >= (b + 1) / 10.0) ++b;
        }
        counts[b] += 1;
        n += 1;
      }
    }
    const auto d = property_distribution(pool, p);
    for (int b = 0; b < bins; ++b) {
      CHECK(std::abs(d.probs[b] - (counts[b] + 1) / (n + bins)) < 1e-12);
    }
  }
  std::vector<SyntaxMatrix> uniform{uniform_pool(rng, 20000)};
  for (double v : property_distribution(uniform, Property::kVertical).probs) {
    CHECK(std::abs(v - 0.1) < 0.01);
  }
}

TEST_CASE("kl divergence") {
  const std::vector<double> p = {0.5, 0.5}, q = {0.25, 0.75};
  CHECK(kl_divergence(p, p) < 1e-12);
  const double expected = 0.5 * std::log(0.5 / 0.25) + 0.5 * std::log(0.5 / 0.75);
  CHECK(std::abs(kl_divergence(p, q) - expected) < 1e-12);
  CHECK(std::abs(kl_divergence(p, q) - 0.14384) < 1e-4);
  const double reverse = direct_kl(q, p);
  CHECK(std::abs(kl_divergence(q, p) - reverse) < 1e-12);
  CHECK(kl_divergence(p, q) != doctest::Approx(kl_divergence(q, p)));
  CHECK_THROWS_AS(kl_divergence(p, std::vector<double>{1.0, 0.0}), InvalidInput);
  CHECK_THROWS_AS(kl_divergence(p, std::vector<double>{1.0}), DimensionMismatch);
}

TEST_CASE("kl matrix") {
  std::mt19937_64 rng(2);
  std::vector<SyntaxMatrix> a{uniform_pool(rng, 400)};
  const auto pa = property_distribution(a, Property::kHorizontal);
  const KlMatrix same = kl_matrix({{"one", pa}, {"two", pa}});
  for (const auto& row : same.values) {
    for (double v : row) CHECK(v == 0.0);
  }

  std::map<std::string, PropertyDistribution> classes;
  for (int c = 0; c < 3; ++c) {
    std::vector<SyntaxMatrix> pool{uniform_pool(rng, 500, 0.3 * c)};
    classes["c" + std::to_string(c)] = property_distribution(pool, Property::kHorizontal);
  }
  const KlMatrix m = kl_matrix(classes);
  REQUIRE(m.scenes.size() == 3);
  double best = -1;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const double oracle =
          direct_kl(classes[m.scenes[i]].probs, classes[m.scenes[j]].probs);
      CHECK(std::abs(m.values[i][j] - oracle) < 1e-12);
      if (i != j) best = std::max(best, oracle);
    }
  }
  CHECK(m.max_pair.value == doctest::Approx(best));
  CHECK(kl_matrix_csv(m).find("c0") != std::string::npos);
}

TEST_CASE("kl stays non-negative on smoothed pairs") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> c(0, 20);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> p(10), q(10);
    double sp = 0, sq = 0;
    for (int i = 0; i < 10; ++i) {
      p[i] = c(rng) + 1.0;
      q[i] = c(rng) + 1.0;
      sp += p[i];
      sq += q[i];
    }
    for (int i = 0; i < 10; ++i) {
      p[i] /= sp;
      q[i] /= sq;
    }
    CHECK(kl_divergence(p, q) >= 0.0);
  }
}

TEST_CASE("zero noise only rescales") {
  ImageMeta meta{"n", 640, 480, {}};
  std::vector<RawBox> boxes = {{10, 20, 100, 50, 3, {}}, {0, 0, 640, 480, 1, {}}};
  const NoisyImage out = inject_noise(boxes, meta, 0.0, 1);
  CHECK(out.meta.width == 320);
  CHECK(out.meta.height == 240);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    CHECK(out.boxes[i].x_min == doctest::Approx(boxes[i].x_min / 2));
    CHECK(out.boxes[i].width == doctest::Approx(boxes[i].width / 2));
    CHECK(out.boxes[i].color_label == boxes[i].color_label);
    const auto a = normalize_box(boxes[i], meta);
    const auto b = normalize_box(out.boxes[i], out.meta);
    CHECK(std::abs(a.x - b.x) < 1e-12);
    CHECK(std::abs(a.size - b.size) < 1e-12);
  }
  CHECK_THROWS_AS(inject_noise(boxes, meta, -1.0, 1), ConfigError);
}

TEST_CASE("noise has the requested spread") {
  ImageMeta meta{"n", 320, 320, {}};
  std::vector<RawBox> boxes(10000, RawBox{110, 110, 100, 100, 0, {}});
  const NoisyImage out = inject_noise(boxes, meta, 20.0, 7);
  for (auto field : {&RawBox::x_min, &RawBox::y_min, &RawBox::width, &RawBox::height}) {
    double sum = 0, sq = 0;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      const double d = out.boxes[i].*field - boxes[i].*field;
      sum += d;
      sq += d * d;
    }
    const double n = static_cast<double>(boxes.size());
    const double sd = std::sqrt(sq / n - (sum / n) * (sum / n));
    CHECK(std::abs(sd - 20.0) < 2.0);
  }
  const NoisyImage position_only =
      inject_noise(boxes, meta, 20.0, 7, NoiseTargets::parse("position"));
  CHECK(position_only.boxes[5].width == 100);
  CHECK(position_only.boxes[5].x_min != 110);
}

TEST_CASE("noise grid and seeds") {
  CHECK(std::vector<double>(kNoiseGrid.begin(), kNoiseGrid.end()) ==
        std::vector<double>{2, 4, 6, 8, 10, 15, 20});
  CHECK(cell_seed(1, 2) == cell_seed(1, 2));
  CHECK(cell_seed(1, 2) != cell_seed(1, 3));
  CHECK(cell_seed(1, 2) != cell_seed(2, 2));
}

TEST_CASE("restricted property masks") {
  const std::vector<Property> ratio = {Property::kRatio};
  CHECK(histogram_dimension(3, restrict_properties(ratio)) == 3);
  const std::vector<Property> color = {Property::kColor};
  CHECK(histogram_dimension(3, restrict_properties(color)) == 11);
  const std::vector<Property> all(kAllProperties.begin(), kAllProperties.end());
  const PropertyMask full = restrict_properties(all);
  CHECK(full.is_full());

  std::mt19937_64 rng(4);
  const SyntaxMatrix m = uniform_pool(rng, 100);
  const BinBoundaries b = BinBoundaries::uniform(3);
  CHECK(histogram_from_syntax(m, b, full).counts == histogram_from_syntax(m, b).counts);
  CHECK_THROWS_AS(restrict_properties(std::vector<Property>{}), ConfigError);
}
