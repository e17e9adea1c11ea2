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

#include "thingsyntax/core.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "thingsyntax/errors.h"

namespace thingsyntax {
namespace {

constexpr std::array<std::string_view, kNumProperties> kPropertyNames = {
    "horizontal", "vertical", "size", "ratio", "color"};

constexpr std::array<std::string_view, kNumColors> kColorNames = {
    "black", "blue",   "brown", "grey", "green", "orange",
    "pink",  "purple", "red",   "white", "yellow"};

// Hand-picked sRGB anchors for the basic color terms.
constexpr std::array<Rgb, kNumColors> kPrototypes = {{
    {0, 0, 0},        // black
    {0, 0, 255},      // blue
    {139, 69, 19},    // brown
    {128, 128, 128},  // grey
    {0, 160, 0},      // green
    {255, 140, 0},    // orange
    {255, 160, 200},  // pink
    {128, 0, 128},    // purple
    {220, 0, 0},      // red
    {255, 255, 255},  // white
    {255, 235, 0},    // yellow
}};

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

double linearize(std::uint8_t channel) {
  const double c = channel / 255.0;
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double kDelta = 6.0 / 29.0;
  return t > kDelta * kDelta * kDelta ? std::cbrt(t)
                                      : t / (3 * kDelta * kDelta) + 4.0 / 29.0;
}

std::array<Lab, kNumColors> prototype_labs() {
  std::array<Lab, kNumColors> labs;
  for (int i = 0; i < kNumColors; ++i) labs[i] = srgb_to_lab(kPrototypes[i]);
  return labs;
}

}  // namespace

std::string_view property_name(Property property) {
  return kPropertyNames[static_cast<int>(property)];
}

std::optional<Property> property_from_name(std::string_view name) {
  const std::string key = lower(name);
  for (int i = 0; i < kNumProperties; ++i) {
    if (kPropertyNames[i] == key) return static_cast<Property>(i);
  }
  if (key == "x") return Property::kHorizontal;
  if (key == "y") return Property::kVertical;
  if (key == "shape") return Property::kRatio;
  return std::nullopt;
}

const std::array<std::string_view, kNumColors>& color_names() {
  return kColorNames;
}

std::optional<int> color_from_name(std::string_view name) {
  std::string key = lower(name);
  if (key == "gray") key = "grey";
  for (int i = 0; i < kNumColors; ++i) {
    if (kColorNames[i] == key) return i;
  }
  return std::nullopt;
}

PropertyMask PropertyMask::only(Property property) {
  std::bitset<kNumProperties> bits;
  bits.set(static_cast<int>(property));
  return PropertyMask(bits);
}

PropertyMask PropertyMask::with(Property property) const {
  auto bits = bits_;
  bits.set(static_cast<int>(property));
  return PropertyMask(bits);
}

PropertyMask PropertyMask::parse(std::string_view text) {
  if (lower(text) == "all") return all();
  std::bitset<kNumProperties> bits;
  std::stringstream in{std::string(text)};
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    const auto property = property_from_name(item);
    if (!property) throw ConfigError("unknown property '" + item + "'");
    bits.set(static_cast<int>(*property));
  }
  if (bits.none()) throw ConfigError("property mask must not be empty");
  return PropertyMask(bits);
}

std::vector<Property> PropertyMask::properties() const {
  std::vector<Property> out;
  for (Property p : kAllProperties) {
    if (contains(p)) out.push_back(p);
  }
  return out;
}

std::string PropertyMask::to_string() const {
  if (is_full()) return "all";
  std::string out;
  for (Property p : properties()) {
    if (!out.empty()) out += ',';
    out += property_name(p);
  }
  return out;
}

double color_feature(int color_index) { return color_index / 10.0; }

double ThingWindow::value(Property property) const {
  switch (property) {
    case Property::kHorizontal:
      return x;
    case Property::kVertical:
      return y;
    case Property::kSize:
      return size;
    case Property::kRatio:
      return ratio;
    case Property::kColor:
      return color_feature(color);
  }
  return 0.0;
}

std::array<double, kNumProperties> ThingWindow::features() const {
  return {x, y, size, ratio, color_feature(color)};
}

std::vector<double> ThingWindow::features(const PropertyMask& mask) const {
  std::vector<double> out;
  out.reserve(mask.count());
  for (Property p : kAllProperties) {
    if (mask.contains(p)) out.push_back(value(p));
  }
  return out;
}

double aspect_ratio(double box_width, double box_height) {
  if (!(box_width > 0.0) || !(box_height > 0.0)) {
    throw InvalidGeometry("box dimensions must be positive");
  }
  if (box_width <= box_height) return 0.5 * (box_width / box_height);
  return 1.0 - 0.5 * (box_height / box_width);
}

std::optional<RawBox> clip_box(const RawBox& box, const ImageMeta& meta) {
  const double x0 = std::max(box.x_min, 0.0);
  const double y0 = std::max(box.y_min, 0.0);
  const double x1 = std::min(box.x_min + box.width, double(meta.width));
  const double y1 = std::min(box.y_min + box.height, double(meta.height));
  if (!(x1 > x0) || !(y1 > y0)) return std::nullopt;
  RawBox out = box;
  out.x_min = x0;
  out.y_min = y0;
  out.width = x1 - x0;
  out.height = y1 - y0;
  return out;
}

ThingWindow normalize_box(const RawBox& box, const ImageMeta& meta) {
  if (meta.width < 1 || meta.height < 1) {
    throw InvalidGeometry("image '" + meta.image_id +
                          "' has non-positive dimensions");
  }
  if (!(box.width > 0.0) || !(box.height > 0.0)) {
    throw InvalidGeometry("box dimensions must be positive");
  }
  if (box.color_label && (*box.color_label < 0 || *box.color_label >= kNumColors)) {
    throw InvalidInput("color label " + std::to_string(*box.color_label) +
                       " is outside 0..10");
  }
  const auto clipped = clip_box(box, meta);
  if (!clipped) {
    throw InvalidGeometry("box lies outside image '" + meta.image_id + "'");
  }
  const double image_w = meta.width;
  const double image_h = meta.height;
  ThingWindow w;
  w.x = (clipped->x_min + clipped->width / 2) / image_w;
  w.y = (clipped->y_min + clipped->height / 2) / image_h;
  w.size = (clipped->width * clipped->height) / (image_w * image_h);
  w.ratio = aspect_ratio(clipped->width, clipped->height);
  w.color = box.color_label.value_or(0);
  return w;
}

Lab srgb_to_lab(Rgb rgb) {
  const double r = linearize(rgb.r);
  const double g = linearize(rgb.g);
  const double b = linearize(rgb.b);
  const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  const double fx = lab_f(x / 0.95047);
  const double fy = lab_f(y / 1.00000);
  const double fz = lab_f(z / 1.08883);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

const std::array<Rgb, kNumColors>& color_prototypes() { return kPrototypes; }

int nearest_color(Rgb rgb) {
  static const std::array<Lab, kNumColors> labs = prototype_labs();
  const Lab lab = srgb_to_lab(rgb);
  int best = 0;
  double best_distance = 0.0;
  for (int i = 0; i < kNumColors; ++i) {
    const double dl = lab.l - labs[i].l;
    const double da = lab.a - labs[i].a;
    const double db = lab.b - labs[i].b;
    const double distance = dl * dl + da * da + db * db;
    if (i == 0 || distance < best_distance) {
      best = i;
      best_distance = distance;
    }
  }
  return best;
}

RgbImage::RgbImage(int width, int height, Rgb fill)
    : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw InvalidGeometry("image dimensions must be positive");
  }
  pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

std::vector<Rgb> RgbImage::region(const RawBox& box) const {
  const int x0 = std::max(0, static_cast<int>(std::floor(box.x_min)));
  const int y0 = std::max(0, static_cast<int>(std::floor(box.y_min)));
  const int x1 =
      std::min(width_, static_cast<int>(std::ceil(box.x_min + box.width)));
  const int y1 =
      std::min(height_, static_cast<int>(std::ceil(box.y_min + box.height)));
  std::vector<Rgb> out;
  if (x1 <= x0 || y1 <= y0) return out;
  out.reserve(static_cast<std::size_t>(x1 - x0) * (y1 - y0));
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) out.push_back(at(x, y));
  }
  return out;
}

int dominant_color(std::span<const Rgb> region) {
  if (region.empty()) throw InvalidInput("dominant_color: empty pixel region");
  std::array<std::size_t, kNumColors> votes{};
  for (const Rgb& pixel : region) ++votes[nearest_color(pixel)];
  // max_element returns the first maximum, i.e. the lowest index on ties.
  return static_cast<int>(std::max_element(votes.begin(), votes.end()) -
                          votes.begin());
}

SyntaxMatrix build_syntax(std::span<const RawBox> boxes, const ImageMeta& meta,
                          const RgbImage* pixels,
                          std::vector<std::string>* warnings) {
  SyntaxMatrix matrix;
  matrix.image_id = meta.image_id;
  matrix.rows.reserve(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const RawBox& box = boxes[i];
    if (!box.color_label && pixels == nullptr) {
      throw ConfigError("image '" + meta.image_id + "', box " +
                        std::to_string(i) +
                        ": no color label and no pixels to measure it from");
    }
    const auto clipped = clip_box(box, meta);
    if (!clipped || !(box.width > 0.0) || !(box.height > 0.0)) {
      if (warnings != nullptr) {
        warnings->push_back("image '" + meta.image_id + "', box " +
                            std::to_string(i) +
                            " has no area inside the image; dropped");
      }
      continue;
    }
    ThingWindow w = normalize_box(*clipped, meta);
    if (!box.color_label) w.color = dominant_color(pixels->region(*clipped));
    matrix.rows.push_back(w);
  }
  return matrix;
}

}  // namespace thingsyntax
