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
#include <map>
#include <random>

#include "doctest.h"
#include "thingsyntax/core.h"
#include "thingsyntax/errors.h"

using namespace thingsyntax;

namespace {

int color(const char* name) { return *color_from_name(name); }

RgbImage striped_image(std::mt19937_64& rng, int w, int h) {
  RgbImage img(w, h);
  const auto& protos = color_prototypes();
  std::uniform_int_distribution<int> pick(0, kNumColors - 1);
  for (int y = 0; y < h; ++y) {
    const Rgb c = protos[pick(rng)];
    for (int x = 0; x < w; ++x) img.at(x, y) = c;
  }
  return img;
}

}  // namespace

TEST_CASE("aspect ratio branches") {
  CHECK(aspect_ratio(10, 10) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(aspect_ratio(10, 20) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(aspect_ratio(20, 10) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK_THROWS_AS(aspect_ratio(0, 5), InvalidGeometry);
  CHECK_THROWS_AS(aspect_ratio(5, -1), InvalidGeometry);
}

TEST_CASE("aspect ratio complement and range") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> side(0.01, 1000.0);
  for (int i = 0; i < 2000; ++i) {
    const double a = side(rng), b = side(rng);
    const double r = aspect_ratio(a, b);
    CHECK(std::abs(r + aspect_ratio(b, a) - 1.0) < 1e-12);
    CHECK(r >= 0.0);
    CHECK(r < 1.0);
    if (a < b) CHECK(r < 0.5);
    if (a > b) CHECK(r > 0.5);
  }
}

TEST_CASE("normalize a centered box") {
  ImageMeta meta{"img", 320, 240, {}};
  RawBox box{144, 108, 32, 24, 4, {}};
  const ThingWindow w = normalize_box(box, meta);
  CHECK(w.x == doctest::Approx(0.5));
  CHECK(w.y == doctest::Approx(0.5));
  CHECK(w.size == doctest::Approx(0.01));
  CHECK(w.ratio == doctest::Approx(1.0 - 0.5 * (24.0 / 32.0)));
  CHECK(w.color == 4);

  ImageMeta big{"img", 640, 480, {}};
  RawBox scaled{288, 216, 64, 48, 4, {}};
  const ThingWindow s = normalize_box(scaled, big);
  CHECK(std::abs(s.x - w.x) < 1e-12);
  CHECK(std::abs(s.y - w.y) < 1e-12);
  CHECK(std::abs(s.size - w.size) < 1e-12);
  CHECK(std::abs(s.ratio - w.ratio) < 1e-12);
}

TEST_CASE("full image box") {
  for (auto [w, h] : {std::pair{100, 100}, std::pair{640, 480}, std::pair{33, 71}}) {
    ImageMeta meta{"img", w, h, {}};
    const ThingWindow t = normalize_box(RawBox{0, 0, double(w), double(h), 7, {}}, meta);
    CHECK(t.x == doctest::Approx(0.5));
    CHECK(t.y == doctest::Approx(0.5));
    CHECK(t.size == doctest::Approx(1.0));
    CHECK(t.color == 7);
  }
}

TEST_CASE("box outside the image is rejected") {
  ImageMeta meta{"img", 100, 100, {}};
  CHECK_THROWS_AS(normalize_box(RawBox{200, 200, 10, 10, 0, {}}, meta), InvalidGeometry);
  CHECK_THROWS_AS(normalize_box(RawBox{10, 10, 10, 10, 11, {}}, meta), InvalidInput);
  const auto clipped = clip_box(RawBox{90, 90, 20, 20, 0, {}}, meta);
  REQUIRE(clipped);
  CHECK(clipped->width == doctest::Approx(10));
}

TEST_CASE("color prototypes map to themselves") {
  for (int i = 0; i < kNumColors; ++i) {
    CHECK(nearest_color(color_prototypes()[i]) == i);
  }
  CHECK(nearest_color(Rgb{0, 255, 0}) == color("green"));
  CHECK(color_from_name("gray") == color_from_name("grey"));
  CHECK_FALSE(color_from_name("mauve"));
}

TEST_CASE("dominant color of uniform and mixed regions") {
  std::vector<Rgb> green(50, Rgb{0, 255, 0});
  CHECK(dominant_color(green) == color("green"));
  std::vector<Rgb> black(10, Rgb{0, 0, 0});
  CHECK(dominant_color(black) == color("black"));

  std::vector<Rgb> mixed;
  for (int i = 0; i < 60; ++i) mixed.push_back(Rgb{0, 0, 255});
  for (int i = 0; i < 40; ++i) mixed.push_back(Rgb{255, 0, 0});
  std::map<int, int> votes;
  for (const Rgb& p : mixed) ++votes[nearest_color(p)];
  const auto mode = std::max_element(votes.begin(), votes.end(), [](auto& a, auto& b) {
    return a.second < b.second;
  });
  CHECK(mode->first == color("blue"));
  CHECK(dominant_color(mixed) == mode->first);
  CHECK_THROWS_AS(dominant_color(std::span<const Rgb>{}), InvalidInput);
}

TEST_CASE("build_syntax") {
  ImageMeta meta{"img", 200, 100, {}};
  CHECK(build_syntax({}, meta).empty());

  std::vector<RawBox> labeled = {{0, 0, 10, 10, 1, {}}, {50, 20, 30, 40, 2, {}},
                                 {100, 50, 100, 50, 9, {}}};
  const SyntaxMatrix m = build_syntax(labeled, meta);
  REQUIRE(m.size() == 3);
  CHECK(m.rows[0].color == 1);
  CHECK(m.rows[1].color == 2);
  CHECK(m.rows[2].color == 9);

  std::vector<RawBox> unlabeled = {{0, 0, 10, 10, {}, {}}};
  CHECK_THROWS_AS(build_syntax(unlabeled, meta), ConfigError);

  std::vector<std::string> warnings;
  std::vector<RawBox> degenerate = {{0, 0, 0, 10, 1, {}}, {0, 0, 5, 5, 1, {}}};
  CHECK(build_syntax(degenerate, meta, nullptr, &warnings).size() == 1);
  CHECK(warnings.size() == 1);
}

TEST_CASE("build_syntax over pixels equals per-box composition") {
  std::mt19937_64 rng(11);
  const RgbImage img = striped_image(rng, 120, 90);
  ImageMeta meta{"img", 120, 90, {}};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<RawBox> boxes;
  for (int i = 0; i < 5; ++i) {
    const double x = u(rng) * 100, y = u(rng) * 70;
    boxes.push_back({x, y, 5 + u(rng) * 15, 5 + u(rng) * 15, {}, {}});
  }
  const SyntaxMatrix m = build_syntax(boxes, meta, &img);
  REQUIRE(m.size() == 5);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    ThingWindow expected = normalize_box(boxes[i], meta);
    expected.color = dominant_color(img.region(boxes[i]));
    CHECK(m.rows[i] == expected);
  }
}

TEST_CASE("property mask") {
  CHECK(PropertyMask::parse("all").is_full());
  const auto m = PropertyMask::parse("ratio,color");
  CHECK(m.count() == 2);
  CHECK(m.contains(Property::kRatio));
  CHECK_FALSE(m.contains(Property::kSize));
  CHECK(m.to_string() == "ratio,color");
  CHECK(PropertyMask::parse(m.to_string()) == m);
  CHECK_THROWS_AS(PropertyMask::parse(""), ConfigError);
  CHECK_THROWS_AS(PropertyMask::parse("depth"), ConfigError);
  ThingWindow w{0.1, 0.2, 0.3, 0.4, 5};
  CHECK(w.features(m) == std::vector<double>{0.4, 0.5});
}
