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

// Things syntax: the per-image ensemble of nameless "thing" windows, each
// described by normalized position, size, aspect ratio and dominant color.

#ifndef THINGSYNTAX_CORE_H_
#define THINGSYNTAX_CORE_H_

#include <array>
#include <bitset>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace thingsyntax {

inline constexpr int kNumColors = 11;
inline constexpr int kNumProperties = 5;

// Canonical property order. Histogram layout, feature vectors and model files
// all follow it.
enum class Property : int {
  kHorizontal = 0,
  kVertical = 1,
  kSize = 2,
  kRatio = 3,
  kColor = 4,
};

inline constexpr std::array<Property, kNumProperties> kAllProperties = {
    Property::kHorizontal, Property::kVertical, Property::kSize,
    Property::kRatio, Property::kColor};

std::string_view property_name(Property property);
std::optional<Property> property_from_name(std::string_view name);

// Lower-case basic color names, indexed 0..10.
const std::array<std::string_view, kNumColors>& color_names();
std::optional<int> color_from_name(std::string_view name);

// Subset of the five properties a pipeline is restricted to.
class PropertyMask {
 public:
  // Full mask.
  PropertyMask() { bits_.set(); }

  static PropertyMask all() { return PropertyMask(); }
  static PropertyMask none() { return PropertyMask(std::bitset<kNumProperties>()); }
  static PropertyMask only(Property property);
  // Comma separated property names, or "all". Throws ConfigError.
  static PropertyMask parse(std::string_view text);

  bool contains(Property property) const {
    return bits_.test(static_cast<int>(property));
  }
  bool is_full() const { return bits_.all(); }
  bool empty() const { return bits_.none(); }
  int count() const { return static_cast<int>(bits_.count()); }
  PropertyMask with(Property property) const;
  // Selected properties in canonical order.
  std::vector<Property> properties() const;
  std::string to_string() const;

  friend bool operator==(const PropertyMask&, const PropertyMask&) = default;

 private:
  explicit PropertyMask(std::bitset<kNumProperties> bits) : bits_(bits) {}
  std::bitset<kNumProperties> bits_;
};

struct ImageMeta {
  std::string image_id;
  int width = 0;
  int height = 0;
  std::optional<std::string> scene_label;
};

// Axis-aligned box in pixel coordinates, (x_min, y_min) is the top-left
// corner.
struct RawBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double width = 0.0;
  double height = 0.0;
  std::optional<int> color_label;
  std::optional<std::string> source;

  friend bool operator==(const RawBox&, const RawBox&) = default;
};

struct ThingWindow {
  double x = 0.0;      // horizontal center / image width, [0,1]
  double y = 0.0;      // vertical center / image height, [0,1]
  double size = 0.0;   // box area / image area, (0,1]
  double ratio = 0.5;  // aspect_ratio(), [0,1)
  int color = 0;       // index into color_names()

  double value(Property property) const;
  // 5-D numeric vector; color enters as color / 10.
  std::array<double, kNumProperties> features() const;
  // Masked columns of features(), in canonical order.
  std::vector<double> features(const PropertyMask& mask) const;

  friend bool operator==(const ThingWindow&, const ThingWindow&) = default;
};

struct SyntaxMatrix {
  std::string image_id;
  std::vector<ThingWindow> rows;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
};

double color_feature(int color_index);

// Shape of a box: 0.5 for squares, [0,0.5) for tall boxes, (0.5,1) for broad
// ones. aspect_ratio(a, b) + aspect_ratio(b, a) == 1.
double aspect_ratio(double box_width, double box_height);

// Intersection of `box` with the image rectangle; std::nullopt when nothing of
// positive area remains.
std::optional<RawBox> clip_box(const RawBox& box, const ImageMeta& meta);

// Resolution-free window of a box. The box is clipped to the image first;
// throws InvalidGeometry when it does not overlap the image or when either
// dimension is non-positive. The color is copied from `box.color_label`
// (0 when absent).
ThingWindow normalize_box(const RawBox& box, const ImageMeta& meta);

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Lab {
  double l = 0.0;
  double a = 0.0;
  double b = 0.0;
};

// sRGB (D65) to CIELAB.
Lab srgb_to_lab(Rgb rgb);

// sRGB values of the 11 color prototypes, indexed like color_names().
const std::array<Rgb, kNumColors>& color_prototypes();

// Nearest prototype in CIELAB; ties go to the lowest index.
int nearest_color(Rgb rgb);

class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {});

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }
  Rgb& at(int x, int y) { return pixels_[index(x, y)]; }
  Rgb at(int x, int y) const { return pixels_[index(x, y)]; }
  std::span<const Rgb> pixels() const { return pixels_; }

  // Pixels covered by `box`, row by row. Partially covered border pixels are
  // included; at least one pixel is returned for any box overlapping the
  // image.
  std::vector<Rgb> region(const RawBox& box) const;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }
  int width_ = 0;
  int height_ = 0;
  std::vector<Rgb> pixels_;
};

// Mode of the per-pixel nearest-prototype labels. Throws InvalidInput on an
// empty region.
int dominant_color(std::span<const Rgb> region);

// One row per box, in input order. Boxes that clip to nothing are dropped and
// reported through `warnings` when given. Boxes without a color label take
// the dominant color of their pixels; ConfigError when such a box exists and
// `pixels` is null.
SyntaxMatrix build_syntax(std::span<const RawBox> boxes, const ImageMeta& meta,
                          const RgbImage* pixels = nullptr,
                          std::vector<std::string>* warnings = nullptr);

}  // namespace thingsyntax

#endif  // THINGSYNTAX_CORE_H_
