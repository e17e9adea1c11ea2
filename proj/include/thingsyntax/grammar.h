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

// Quantization of thing windows into closed-grammar statements such as
// "Green small squared thing at top middle", and statement histograms.

#ifndef THINGSYNTAX_GRAMMAR_H_
#define THINGSYNTAX_GRAMMAR_H_

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "thingsyntax/core.h"

namespace thingsyntax {

inline constexpr int kNumContinuous = 4;  // horizontal, vertical, size, ratio

// Per-property cut points. Bin k of a property is [cut_{k-1}, cut_k), the
// last bin is closed above.
struct BinBoundaries {
  int bins = 3;
  // Indexed by horizontal, vertical, size, ratio; B-1 strictly increasing
  // values in (0,1) each.
  std::array<std::vector<double>, kNumContinuous> cuts;

  const std::vector<double>& cuts_for(Property property) const;
  // Throws ConfigError when the invariants do not hold.
  void validate() const;

  // Cuts at k/B.
  static BinBoundaries uniform(int bins);

  friend bool operator==(const BinBoundaries&, const BinBoundaries&) = default;
};

// Cut points at the k/B empirical quantiles (linear interpolation between
// order statistics) of the pooled holdout windows. Throws InsufficientData
// when fewer than B windows are available.
BinBoundaries fit_boundaries(std::span<const SyntaxMatrix> holdout, int bins);

// Bin index of `value` for the given cuts.
int bin_of(double value, const std::vector<double>& cuts);

struct Statement {
  static constexpr int kAnyColor = -1;

  int horizontal = 0;
  int vertical = 0;
  int size = 0;
  int ratio = 0;
  int color = 0;  // 0..10, or kAnyColor

  int bin(Property property) const;
  friend bool operator==(const Statement&, const Statement&) = default;
};

Statement quantize_window(const ThingWindow& window, const BinBoundaries& bins);

// Words for each quantized property at a given bin count. B=3 and B=5 have
// natural-language scales, other counts use "<property>-k" tokens.
class Vocabulary {
 public:
  explicit Vocabulary(int bins);

  int bins() const { return bins_; }
  const std::string& word(Property property, int bin) const;
  // Bin for a lower-case word, -1 when the word is not in the scale.
  int lookup(Property property, std::string_view word) const;
  // Bin that "at center" with no horizontal word maps to; -1 when the scale
  // has no middle word.
  int implicit_horizontal() const { return implicit_horizontal_; }
  int center_vertical() const { return center_vertical_; }

 private:
  int bins_;
  std::array<std::vector<std::string>, kNumContinuous> words_;
  int implicit_horizontal_ = -1;
  int center_vertical_ = -1;
};

// "<Color> <size> <shape> thing at <vertical> <horizontal>".
std::string render_statement(const Statement& statement, int bins = 3);

// Case-insensitive inverse of render_statement. "thing" and a trailing period
// are optional, the color may be "any" (optionally quoted), and "at center"
// alone means the center-middle position. Throws ParseError naming the
// offending token.
Statement parse_statement(std::string_view text, int bins = 3);

// Number of histogram bins for B bins per continuous property restricted to
// `mask`: B^(#continuous) * (11 if color is kept).
std::size_t histogram_dimension(int bins, const PropertyMask& mask = {});

// Row-major index over the masked properties in canonical order. The
// statement must carry a concrete color when color is masked in.
std::size_t statement_index(const Statement& statement, int bins,
                            const PropertyMask& mask = {});
// Inverse of statement_index for the full mask.
Statement statement_from_index(std::size_t index, int bins);

struct StatementHistogram {
  int bins = 3;
  PropertyMask mask;
  std::vector<double> counts;

  StatementHistogram() = default;
  StatementHistogram(int bins, const PropertyMask& mask);

  std::size_t dimension() const { return counts.size(); }
  double total() const;
  // One count for `statement`; an "any" color spreads it as 1/11 over the 11
  // color slices (or a single count when color is masked out).
  void add(const Statement& statement, double weight = 1.0);
  friend bool operator==(const StatementHistogram&, const StatementHistogram&) = default;
};

StatementHistogram histogram_from_syntax(const SyntaxMatrix& syntax,
                                         const BinBoundaries& bins,
                                         const PropertyMask& mask = {});

// ParseError messages and line() refer to the one-based position in `texts`.
StatementHistogram histogram_from_statements(
    std::span<const std::string> texts, int bins,
    const PropertyMask& mask = {});

// One rendered statement per row of `syntax`.
std::vector<std::string> render_syntax(const SyntaxMatrix& syntax,
                                       const BinBoundaries& bins);

}  // namespace thingsyntax

#endif  // THINGSYNTAX_GRAMMAR_H_
