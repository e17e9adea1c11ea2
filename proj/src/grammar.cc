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

#include "thingsyntax/grammar.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "thingsyntax/errors.h"

namespace thingsyntax {
namespace {

constexpr std::array<Property, kNumContinuous> kContinuous = {
    Property::kHorizontal, Property::kVertical, Property::kSize,
    Property::kRatio};

int continuous_slot(Property property) {
  if (property == Property::kColor) {
    throw ConfigError("color has no bin boundaries");
  }
  return static_cast<int>(property);
}

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string capitalized(std::string_view word) {
  std::string out(word);
  if (!out.empty()) {
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  }
  return out;
}

std::vector<std::string> words_for(Property property, int bins) {
  if (bins == 3) {
    switch (property) {
      case Property::kHorizontal:
        return {"left", "middle", "right"};
      case Property::kVertical:
        return {"top", "center", "bottom"};
      case Property::kSize:
        return {"small", "medium", "large"};
      case Property::kRatio:
        return {"tall", "squared", "wide"};
      default:
        break;
    }
  } else if (bins == 5) {
    switch (property) {
      case Property::kHorizontal:
        return {"most-left", "left", "middle", "right", "most-right"};
      case Property::kVertical:
        return {"most-top", "top", "center", "bottom", "most-bottom"};
      case Property::kSize:
        return {"smallest", "small", "medium", "large", "largest"};
      case Property::kRatio:
        return {"most-tall", "tall", "squared", "wide", "most-wide"};
      default:
        break;
    }
  }
  std::vector<std::string> words;
  for (int k = 0; k < bins; ++k) {
    words.push_back(std::string(property_name(property)) + "-" +
                    std::to_string(k));
  }
  return words;
}

struct Token {
  std::string text;  // lower-cased, quotes stripped
  std::string original;
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    if (i >= text.size()) break;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) {
      ++j;
    }
    std::string_view raw = text.substr(i, j - i);
    Token token{std::string(raw), std::string(raw)};
    std::string& t = token.text;
    auto is_quote = [](char c) { return c == '\'' || c == '"'; };
    while (!t.empty() && is_quote(t.front())) t.erase(t.begin());
    while (!t.empty() && is_quote(t.back())) t.pop_back();
    t = lower(t);
    tokens.push_back(std::move(token));
    i = j;
  }
  // A trailing period, attached or standalone, is optional.
  if (!tokens.empty()) {
    Token& last = tokens.back();
    if (last.text == ".") {
      tokens.pop_back();
    } else if (last.text.size() > 1 && last.text.back() == '.') {
      last.text.pop_back();
    }
  }
  return tokens;
}

// Recursive-descent reader over the token list:
//   statement := color size shape ["thing"] "at" position
//   position  := vertical horizontal | "center"
class StatementParser {
 public:
  StatementParser(std::string_view text, const Vocabulary& vocabulary)
      : tokens_(tokenize(text)), vocabulary_(vocabulary) {}

  Statement parse() {
    Statement s;
    s.color = color();
    s.size = word(Property::kSize, "size");
    s.ratio = word(Property::kRatio, "shape");
    if (peek() == "thing" || peek() == "things") ++pos_;
    expect("at");
    s.vertical = word(Property::kVertical, "vertical position");
    if (at_end()) {
      if (s.vertical != vocabulary_.center_vertical() ||
          vocabulary_.implicit_horizontal() < 0) {
        fail("expected a horizontal position word", "<end>");
      }
      s.horizontal = vocabulary_.implicit_horizontal();
    } else {
      s.horizontal = word(Property::kHorizontal, "horizontal position");
    }
    if (!at_end()) fail("unexpected trailing token", tokens_[pos_].original);
    return s;
  }

 private:
  bool at_end() const { return pos_ >= tokens_.size(); }
  std::string_view peek() const {
    return at_end() ? std::string_view() : std::string_view(tokens_[pos_].text);
  }

  [[noreturn]] void fail(const std::string& what, const std::string& token) {
    throw ParseError(what + " at token " + std::to_string(pos_) + " ('" +
                         token + "')",
                     token, pos_);
  }

  const Token& next(const std::string& expected) {
    if (at_end()) fail("expected " + expected, "<end>");
    return tokens_[pos_++];
  }

  int color() {
    const Token& token = next("a color word");
    if (token.text == "any") return Statement::kAnyColor;
    const auto index = color_from_name(token.text);
    if (!index) {
      --pos_;
      fail("unknown color word", token.original);
    }
    return *index;
  }

  int word(Property property, const std::string& expected) {
    const Token& token = next("a " + expected + " word");
    const int bin = vocabulary_.lookup(property, token.text);
    if (bin < 0) {
      --pos_;
      fail("unknown " + expected + " word", token.original);
    }
    return bin;
  }

  void expect(std::string_view keyword) {
    const Token& token = next("'" + std::string(keyword) + "'");
    if (token.text != keyword) {
      --pos_;
      fail("expected '" + std::string(keyword) + "'", token.original);
    }
  }

  std::vector<Token> tokens_;
  const Vocabulary& vocabulary_;
  std::size_t pos_ = 0;
};

std::size_t ipow(std::size_t base, int exponent) {
  std::size_t out = 1;
  for (int i = 0; i < exponent; ++i) out *= base;
  return out;
}

}  // namespace

const std::vector<double>& BinBoundaries::cuts_for(Property property) const {
  return cuts[continuous_slot(property)];
}

void BinBoundaries::validate() const {
  if (bins < 2) throw ConfigError("bins per property must be at least 2");
  for (int p = 0; p < kNumContinuous; ++p) {
    const auto& c = cuts[p];
    const std::string name(property_name(kContinuous[p]));
    if (static_cast<int>(c.size()) != bins - 1) {
      throw ConfigError(name + ": expected " + std::to_string(bins - 1) +
                        " cut points, got " + std::to_string(c.size()));
    }
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (!(c[i] > 0.0 && c[i] < 1.0)) {
        throw ConfigError(name + ": cut points must lie in (0,1)");
      }
      if (i > 0 && !(c[i] > c[i - 1])) {
        throw ConfigError(name + ": cut points must be strictly increasing");
      }
    }
  }
}

BinBoundaries BinBoundaries::uniform(int bins) {
  if (bins < 2) throw ConfigError("bins per property must be at least 2");
  BinBoundaries b;
  b.bins = bins;
  for (auto& c : b.cuts) {
    for (int k = 1; k < bins; ++k) c.push_back(double(k) / bins);
  }
  return b;
}

BinBoundaries fit_boundaries(std::span<const SyntaxMatrix> holdout, int bins) {
  if (bins < 2) throw ConfigError("bins per property must be at least 2");
  std::size_t total = 0;
  for (const auto& m : holdout) total += m.size();
  if (total < static_cast<std::size_t>(bins)) {
    throw InsufficientData("fit_boundaries: " + std::to_string(total) +
                           " holdout windows for " + std::to_string(bins) +
                           " bins");
  }
  BinBoundaries out;
  out.bins = bins;
  std::vector<double> values;
  values.reserve(total);
  constexpr double kLow = 1e-9;
  constexpr double kHigh = 1.0 - 1e-9;
  for (int p = 0; p < kNumContinuous; ++p) {
    values.clear();
    for (const auto& m : holdout) {
      for (const auto& w : m.rows) values.push_back(w.value(kContinuous[p]));
    }
    std::sort(values.begin(), values.end());
    auto& cuts = out.cuts[p];
    for (int k = 1; k < bins; ++k) {
      const double h = (values.size() - 1) * (double(k) / bins);
      const auto lo = static_cast<std::size_t>(std::floor(h));
      const std::size_t hi = std::min(lo + 1, values.size() - 1);
      double cut = values[lo] + (h - lo) * (values[hi] - values[lo]);
      cut = std::clamp(cut, kLow, kHigh);
      if (!cuts.empty() && cut <= cuts.back()) {
        cut = std::nextafter(cuts.back(), 1.0);
      }
      cuts.push_back(cut);
    }
  }
  out.validate();
  return out;
}

int bin_of(double value, const std::vector<double>& cuts) {
  return static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), value) -
                          cuts.begin());
}

int Statement::bin(Property property) const {
  switch (property) {
    case Property::kHorizontal:
      return horizontal;
    case Property::kVertical:
      return vertical;
    case Property::kSize:
      return size;
    case Property::kRatio:
      return ratio;
    case Property::kColor:
      return color;
  }
  return 0;
}

Statement quantize_window(const ThingWindow& window, const BinBoundaries& bins) {
  Statement s;
  s.horizontal = bin_of(window.x, bins.cuts[0]);
  s.vertical = bin_of(window.y, bins.cuts[1]);
  s.size = bin_of(window.size, bins.cuts[2]);
  s.ratio = bin_of(window.ratio, bins.cuts[3]);
  s.color = window.color;
  return s;
}

Vocabulary::Vocabulary(int bins) : bins_(bins) {
  if (bins < 2) throw ConfigError("bins per property must be at least 2");
  for (int p = 0; p < kNumContinuous; ++p) {
    words_[p] = words_for(kContinuous[p], bins);
  }
  center_vertical_ = lookup(Property::kVertical, "center");
  implicit_horizontal_ = lookup(Property::kHorizontal, "middle");
}

const std::string& Vocabulary::word(Property property, int bin) const {
  const auto& words = words_[continuous_slot(property)];
  if (bin < 0 || bin >= bins_) {
    throw InvalidInput(std::string(property_name(property)) + " bin " +
                       std::to_string(bin) + " is out of range");
  }
  return words[bin];
}

int Vocabulary::lookup(Property property, std::string_view word) const {
  const auto& words = words_[continuous_slot(property)];
  const auto it = std::find(words.begin(), words.end(), word);
  return it == words.end() ? -1 : static_cast<int>(it - words.begin());
}

std::string render_statement(const Statement& statement, int bins) {
  const Vocabulary vocabulary(bins);
  std::string color;
  if (statement.color == Statement::kAnyColor) {
    color = "Any";
  } else if (statement.color >= 0 && statement.color < kNumColors) {
    color = capitalized(color_names()[statement.color]);
  } else {
    throw InvalidInput("color index " + std::to_string(statement.color) +
                       " is out of range");
  }
  return color + " " + vocabulary.word(Property::kSize, statement.size) + " " +
         vocabulary.word(Property::kRatio, statement.ratio) + " thing at " +
         vocabulary.word(Property::kVertical, statement.vertical) + " " +
         vocabulary.word(Property::kHorizontal, statement.horizontal);
}

Statement parse_statement(std::string_view text, int bins) {
  const Vocabulary vocabulary(bins);
  return StatementParser(text, vocabulary).parse();
}

std::size_t histogram_dimension(int bins, const PropertyMask& mask) {
  if (bins < 2) throw ConfigError("bins per property must be at least 2");
  if (mask.empty()) throw ConfigError("property mask must not be empty");
  const int continuous = mask.count() - (mask.contains(Property::kColor) ? 1 : 0);
  return ipow(bins, continuous) *
         (mask.contains(Property::kColor) ? kNumColors : 1);
}

std::size_t statement_index(const Statement& statement, int bins,
                            const PropertyMask& mask) {
  std::size_t index = 0;
  for (Property p : kAllProperties) {
    if (!mask.contains(p)) continue;
    const int radix = p == Property::kColor ? kNumColors : bins;
    const int value = statement.bin(p);
    if (value < 0 || value >= radix) {
      throw InvalidInput(std::string(property_name(p)) + " index " +
                         std::to_string(value) + " is out of range");
    }
    index = index * radix + value;
  }
  return index;
}

Statement statement_from_index(std::size_t index, int bins) {
  if (index >= histogram_dimension(bins)) {
    throw InvalidInput("statement index " + std::to_string(index) +
                       " is out of range");
  }
  Statement s;
  s.color = static_cast<int>(index % kNumColors);
  index /= kNumColors;
  s.ratio = static_cast<int>(index % bins);
  index /= bins;
  s.size = static_cast<int>(index % bins);
  index /= bins;
  s.vertical = static_cast<int>(index % bins);
  s.horizontal = static_cast<int>(index / bins);
  return s;
}

StatementHistogram::StatementHistogram(int bins, const PropertyMask& mask)
    : bins(bins), mask(mask), counts(histogram_dimension(bins, mask), 0.0) {}

double StatementHistogram::total() const {
  double sum = 0.0;
  for (double c : counts) sum += c;
  return sum;
}

void StatementHistogram::add(const Statement& statement, double weight) {
  if (statement.color != Statement::kAnyColor ||
      !mask.contains(Property::kColor)) {
    counts[statement_index(statement, bins, mask)] += weight;
    return;
  }
  Statement s = statement;
  for (int c = 0; c < kNumColors; ++c) {
    s.color = c;
    counts[statement_index(s, bins, mask)] += weight / kNumColors;
  }
}

StatementHistogram histogram_from_syntax(const SyntaxMatrix& syntax,
                                         const BinBoundaries& bins,
                                         const PropertyMask& mask) {
  StatementHistogram h(bins.bins, mask);
  for (const auto& w : syntax.rows) h.add(quantize_window(w, bins));
  return h;
}

StatementHistogram histogram_from_statements(std::span<const std::string> texts,
                                             int bins,
                                             const PropertyMask& mask) {
  StatementHistogram h(bins, mask);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    try {
      h.add(parse_statement(texts[i], bins));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(i + 1) + ": " + e.what(),
                       e.token(), e.position(), i + 1);
    }
  }
  return h;
}

std::vector<std::string> render_syntax(const SyntaxMatrix& syntax,
                                       const BinBoundaries& bins) {
  std::vector<std::string> out;
  out.reserve(syntax.size());
  for (const auto& w : syntax.rows) {
    out.push_back(render_statement(quantize_window(w, bins), bins.bins));
  }
  return out;
}

}  // namespace thingsyntax
