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

#include <algorithm>
#include <random>

#include "doctest.h"
#include "thingsyntax/errors.h"
#include "thingsyntax/grammar.h"

using namespace thingsyntax;

namespace {

int green() { return *color_from_name("green"); }
int blue() { return *color_from_name("blue"); }

SyntaxMatrix random_syntax(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> c(0, kNumColors - 1);
  SyntaxMatrix m{"r", {}};
  for (std::size_t i = 0; i < n; ++i) {
    m.rows.push_back({u(rng), u(rng), u(rng) * u(rng), std::min(u(rng), 0.999), c(rng)});
  }
  return m;
}

int scan_bin(double v, const std::vector<double>& cuts) {
  int b = 0;
  for (double c : cuts) {
    if (v >= c) ++b;
  }
  return b;
}

}  // namespace

TEST_CASE("uniform values give tercile cuts") {
  std::mt19937_64 rng(1);
  std::vector<SyntaxMatrix> holdout{random_syntax(rng, 30000)};
  const BinBoundaries b = fit_boundaries(holdout, 3);
  CHECK(b.cuts_for(Property::kHorizontal)[0] == doctest::Approx(1.0 / 3).epsilon(0.02));
  CHECK(b.cuts_for(Property::kHorizontal)[1] == doctest::Approx(2.0 / 3).epsilon(0.02));
  CHECK(b.cuts_for(Property::kVertical)[0] == doctest::Approx(1.0 / 3).epsilon(0.02));
}

TEST_CASE("median cut for two bins") {
  SyntaxMatrix m{"m", {}};
  for (double v : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}) m.rows.push_back({v, v, v, v, 0});
  std::vector<SyntaxMatrix> holdout{m};
  const BinBoundaries b = fit_boundaries(holdout, 2);
  REQUIRE(b.cuts_for(Property::kHorizontal).size() == 1);
  CHECK(b.cuts_for(Property::kHorizontal)[0] == doctest::Approx(0.35).epsilon(1e-12));
}

TEST_CASE("fitted bins hold equal holdout mass") {
  std::mt19937_64 rng(2);
  std::vector<SyntaxMatrix> holdout{random_syntax(rng, 12000)};
  for (int bins : {3, 5}) {
    const BinBoundaries b = fit_boundaries(holdout, bins);
    for (int p = 0; p < kNumContinuous; ++p) {
      const auto prop = static_cast<Property>(p);
      std::vector<double> mass(bins, 0.0);
      for (const auto& w : holdout[0].rows) {
        mass[scan_bin(w.value(prop), b.cuts_for(prop))] += 1.0;
      }
      for (double m : mass) {
        CHECK(std::abs(m / holdout[0].size() - 1.0 / bins) <= 0.02);
      }
    }
  }
}

TEST_CASE("fit_boundaries needs enough data") {
  std::vector<SyntaxMatrix> empty{SyntaxMatrix{}};
  CHECK_THROWS_AS(fit_boundaries(empty, 3), InsufficientData);
}

TEST_CASE("quantize by interval lookup") {
  const BinBoundaries b = BinBoundaries::uniform(3);
  const Statement s = quantize_window({0.1, 0.1, 0.05, 0.5, green()}, b);
  CHECK(s == Statement{0, 0, 0, 1, green()});
  const double cut = b.cuts_for(Property::kRatio)[0];
  CHECK(bin_of(cut, b.cuts_for(Property::kRatio)) == 1);

  std::mt19937_64 rng(4);
  const SyntaxMatrix m = random_syntax(rng, 500);
  for (const auto& w : m.rows) {
    const Statement q = quantize_window(w, b);
    for (int p = 0; p < kNumContinuous; ++p) {
      const auto prop = static_cast<Property>(p);
      CHECK(q.bin(prop) == scan_bin(w.value(prop), b.cuts_for(prop)));
    }
    CHECK(q.color == w.color);
  }
}

TEST_CASE("render statements") {
  CHECK(render_statement({1, 0, 0, 1, green()}) ==
        "Green small squared thing at top middle");
  CHECK(render_statement({2, 0, 2, 2, blue()}) == "Blue large wide thing at top right");
}

TEST_CASE("parse statements") {
  const Statement s = parse_statement("Green large wide at bottom middle.");
  CHECK(s == Statement{1, 2, 2, 2, green()});
  CHECK(parse_statement("blue LARGE wide thing at top right") ==
        parse_statement("Blue large wide thing at top right"));
  CHECK(parse_statement("Blue large wide at center.") ==
        parse_statement("Blue large wide thing at center middle"));
  CHECK(parse_statement("'Any' small squared at top left.").color == Statement::kAnyColor);

  try {
    parse_statement("Blue enormous wide thing at top right");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.token() == "enormous");
    CHECK(e.position() == 1);
  }
  CHECK_THROWS_AS(parse_statement("Blue large wide thing"), ParseError);
  CHECK_THROWS_AS(parse_statement(""), ParseError);
  CHECK_THROWS_AS(parse_statement("Blue large wide thing at top right extra"), ParseError);
}

TEST_CASE("round trip over every statement") {
  for (int bins : {3, 5}) {
    const std::size_t n = histogram_dimension(bins);
    CHECK(n == static_cast<std::size_t>(bins * bins * bins * bins * 11));
    for (std::size_t i = 0; i < n; ++i) {
      const Statement s = statement_from_index(i, bins);
      CHECK(statement_index(s, bins) == i);
      const Statement back = parse_statement(render_statement(s, bins), bins);
      if (!(back == s)) {
        FAIL_CHECK(render_statement(s, bins));
      }
    }
  }
}

TEST_CASE("histogram dimensions") {
  CHECK(histogram_dimension(3) == 891);
  for (int b = 3; b <= 11; ++b) {
    CHECK(histogram_dimension(b) == static_cast<std::size_t>(b * b * b * b * 11));
  }
  CHECK(histogram_dimension(3, PropertyMask::only(Property::kRatio)) == 3);
  CHECK(histogram_dimension(3, PropertyMask::only(Property::kColor)) == 11);
}

TEST_CASE("histograms from syntax") {
  const BinBoundaries b = BinBoundaries::uniform(3);
  const auto empty = histogram_from_syntax(SyntaxMatrix{}, b);
  CHECK(empty.dimension() == 891);
  CHECK(empty.total() == 0.0);

  SyntaxMatrix seven{"s", {}};
  for (int i = 0; i < 7; ++i) seven.rows.push_back({0.1 + i * 0.01, 0.5, 0.9, 0.5, 3});
  const auto h = histogram_from_syntax(seven, b);
  CHECK(h.total() == 7.0);
  CHECK(std::count_if(h.counts.begin(), h.counts.end(), [](double c) { return c != 0; }) ==
        1);
  CHECK(*std::max_element(h.counts.begin(), h.counts.end()) == 7.0);

  std::mt19937_64 rng(5);
  const SyntaxMatrix m = random_syntax(rng, 200);
  const auto full = histogram_from_syntax(m, b, PropertyMask::all());
  const auto reference = histogram_from_syntax(m, b);
  CHECK(full.counts == reference.counts);
}

TEST_CASE("histograms from statements") {
  std::vector<std::string> three(3, "Green small squared thing at top middle");
  const auto h = histogram_from_statements(three, 3);
  CHECK(h.total() == 3.0);
  CHECK(h.counts[statement_index({1, 0, 0, 1, green()}, 3)] == 3.0);

  const std::vector<std::string> beach = {
      "Blue large wide at center.", "Blue large wide at top right.",
      "White small wide at center middle.", "Grey large wide at top middle.",
      "Grey large wide at bottom middle."};
  const auto bh = histogram_from_statements(beach, 3);
  CHECK(bh.total() == doctest::Approx(5.0));
  CHECK(std::count_if(bh.counts.begin(), bh.counts.end(), [](double c) { return c != 0; }) <=
        5);

  std::vector<std::string> bad = {"Green small squared thing at top middle",
                                  "Green tiny squared thing at top middle"};
  try {
    histogram_from_statements(bad, 3);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.token() == "tiny");
  }
}

TEST_CASE("rendered syntax re-ingests to the same histogram") {
  std::mt19937_64 rng(6);
  const SyntaxMatrix m = random_syntax(rng, 300);
  const BinBoundaries b = BinBoundaries::uniform(3);
  const auto texts = render_syntax(m, b);
  CHECK(texts.size() == m.size());
  CHECK(histogram_from_statements(texts, 3).counts == histogram_from_syntax(m, b).counts);
}

TEST_CASE("any color spreads over color slices") {
  StatementHistogram h(3, PropertyMask::all());
  h.add(Statement{0, 0, 0, 0, Statement::kAnyColor});
  CHECK(h.total() == doctest::Approx(1.0));
  for (int c = 0; c < kNumColors; ++c) {
    CHECK(h.counts[statement_index({0, 0, 0, 0, c}, 3)] == doctest::Approx(1.0 / 11));
  }
}
