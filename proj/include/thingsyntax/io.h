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

// Dataset ingestion, polygon conversion, model persistence and the synthetic
// scene generator.

#ifndef THINGSYNTAX_IO_H_
#define THINGSYNTAX_IO_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "thingsyntax/core.h"
#include "thingsyntax/encoder.h"
#include "thingsyntax/grammar.h"
#include "thingsyntax/retrieval.h"

namespace thingsyntax {

// One image of a windows file: its metadata and thing boxes.
struct WindowsRecord {
  ImageMeta meta;
  std::vector<RawBox> boxes;
};

struct LoadOptions {
  // Boxes kept per image, largest area first; 0 keeps all.
  std::size_t box_cap = 200;
  // Boxes may overflow the image by this many pixels and are clipped;
  // beyond it they are rejected.
  double clip_tolerance = 1.0;
};

// JSON-lines windows file, one image per line:
//   {"image_id": str, "width": int, "height": int, "scene": str?,
//    "boxes": [{"x": num, "y": num, "w": num, "h": num,
//               "color": int?, "source": str?}]}
// Schema violations throw FormatError with the line number; invalid boxes
// are dropped with a warning.
std::vector<WindowsRecord> load_windows(const std::filesystem::path& path,
                                        const LoadOptions& options = {},
                                        std::vector<std::string>* warnings = nullptr);
std::vector<WindowsRecord> parse_windows(std::string_view text,
                                         const LoadOptions& options = {},
                                         std::vector<std::string>* warnings = nullptr);
void save_windows(const std::filesystem::path& path,
                  std::span<const WindowsRecord> records);
std::string windows_to_jsonl(std::span<const WindowsRecord> records);

// Axis-aligned bounding box of a polygon. Throws InvalidGeometry for fewer
// than 3 points or a zero-area extent.
RawBox polygon_to_bbox(std::span<const std::pair<double, double>> points);

// Syntax matrix per record, colors from labels or from `images_dir`/<id>.png
// (or .ppm) when a box is unlabeled.
std::vector<SyntaxMatrix> syntax_from_records(
    std::span<const WindowsRecord> records,
    const std::optional<std::filesystem::path>& images_dir = std::nullopt,
    std::vector<std::string>* warnings = nullptr);

// image_id -> scene label for labeled records.
std::map<std::string, std::string> scene_labels(
    std::span<const WindowsRecord> records);

// Binary PPM (P6) or PNG.
RgbImage load_image(const std::filesystem::path& path);

struct DatasetSplit {
  std::vector<std::string> holdout;
  std::vector<std::string> test;

  bool disjoint() const;
};

// The first `holdout_per_scene` images of every scene, after a seeded
// shuffle, go to the holdout; the rest are test images.
DatasetSplit split_dataset(std::span<const WindowsRecord> records,
                           std::size_t holdout_per_scene, std::uint64_t seed);

// Model files are JSON envelopes
//   {"format": "thingsyntax.<kind>", "version": 1, "payload": {...},
//    "checksum": "fnv1a64:<hex of payload.dump()>"}
// written with a trailing newline. Loading checks format, version and
// checksum and throws FormatError otherwise.
inline constexpr int kModelFormatVersion = 1;

nlohmann::json boundaries_to_json(const BinBoundaries& b);
BinBoundaries boundaries_from_json(const nlohmann::json& j);
nlohmann::json gmm_to_json(const GmmModel& model);
GmmModel gmm_from_json(const nlohmann::json& j);
nlohmann::json profile_to_json(const SceneProfile& profile);
SceneProfile profile_from_json(const nlohmann::json& j);
nlohmann::json prior_to_json(const PriorModel& prior);
PriorModel prior_from_json(const nlohmann::json& j);

std::string seal_model(std::string_view kind, const nlohmann::json& payload);
nlohmann::json unseal_model(std::string_view kind, std::string_view text);

void save_boundaries(const std::filesystem::path& path, const BinBoundaries& b);
BinBoundaries load_boundaries(const std::filesystem::path& path);
void save_gmm(const std::filesystem::path& path, const GmmModel& model);
GmmModel load_gmm(const std::filesystem::path& path);
void save_profile(const std::filesystem::path& path, const SceneProfile& profile);
SceneProfile load_profile(const std::filesystem::path& path);
void save_prior(const std::filesystem::path& path, const PriorModel& prior);
PriorModel load_prior(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex_digest(std::uint64_t value);
std::string file_digest(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);
// Writes through a temporary file and renames, so readers never see a
// partial file.
void write_file(const std::filesystem::path& path, std::string_view contents);

// A built-in synthetic scene class together with its class-true queries.
struct Archetype {
  std::string name;
  std::vector<std::string> statements;
  std::vector<BlockIllustration> illustrations;
};

// "corridor" and "shelfscape".
const std::vector<Archetype>& builtin_archetypes();
const Archetype& archetype(std::string_view name);

// `images_per_class` 640x480 images per archetype with 5-30 labeled boxes
// each, ids "<archetype>-<seed>-<n>". Deterministic in all arguments.
std::vector<WindowsRecord> generate_synthetic(
    std::span<const std::string> archetypes, std::size_t images_per_class,
    std::uint64_t seed);

// Statement query file: one "scene<TAB>statement" per line; '#' comments.
std::map<std::string, std::vector<std::string>> parse_statement_queries(
    std::string_view text);
std::string statement_queries_text(
    const std::map<std::string, std::vector<std::string>>& queries);

// Block query file, JSON lines:
//   {"scene": str, "blocks": [{"x","y","w","h": num, "color": name|"any"}]}
// one illustration per line.
std::map<std::string, std::vector<BlockIllustration>> parse_block_queries(
    std::string_view text);
std::string block_queries_text(
    const std::map<std::string, std::vector<BlockIllustration>>& queries);

// {"x","y","w","h","color"} with a color name or "any".
Block block_from_json(const nlohmann::json& j);
nlohmann::json block_to_json(const Block& block);

}  // namespace thingsyntax

#endif  // THINGSYNTAX_IO_H_
