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

#include "thingsyntax/io.h"

#include <csetjmp>
#include <cstddef>
#include <cstdio>

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "thingsyntax/errors.h"

namespace thingsyntax {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, kNumContinuous> kCutKeys = {
    "horizontal", "vertical", "size", "ratio"};

std::string line_prefix(std::size_t line) {
  return "line " + std::to_string(line) + ": ";
}

double require_number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw FormatError(where + "missing or non-numeric field '" + key + "'");
  }
  return j.at(key).get<double>();
}

template <typename T>
T get_field(const json& j, const char* key) {
  if (!j.contains(key)) {
    throw FormatError(std::string("model payload is missing '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("model field '") + key + "': " + e.what());
  }
}

json matrix_to_json(const std::vector<double>& flat, int rows, int cols) {
  json out = json::array();
  for (int r = 0; r < rows; ++r) {
    out.push_back(std::vector<double>(flat.begin() + r * cols,
                                      flat.begin() + (r + 1) * cols));
  }
  return out;
}

std::vector<double> matrix_from_json(const json& j, int rows, int cols,
                                     const char* name) {
  std::vector<double> flat;
  if (!j.is_array() || static_cast<int>(j.size()) != rows) {
    throw FormatError(std::string("model field '") + name + "' has wrong shape");
  }
  for (const auto& row : j) {
    if (!row.is_array() || static_cast<int>(row.size()) != cols) {
      throw FormatError(std::string("model field '") + name + "' has wrong shape");
    }
    for (const auto& v : row) flat.push_back(v.get<double>());
  }
  return flat;
}

PropertyMask mask_from_json(const json& j) {
  try {
    return PropertyMask::parse(j.get<std::string>());
  } catch (const Error& e) {
    throw FormatError(std::string("bad property mask: ") + e.what());
  }
}

void save_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, text);
}

// Boxes sorted by area, largest first, keeping their input order otherwise.
void apply_cap(std::vector<RawBox>& boxes, std::size_t cap) {
  if (cap == 0 || boxes.size() <= cap) return;
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return boxes[a].width * boxes[a].height > boxes[b].width * boxes[b].height;
  });
  order.resize(cap);
  std::sort(order.begin(), order.end());
  std::vector<RawBox> kept;
  kept.reserve(cap);
  for (std::size_t i : order) kept.push_back(boxes[i]);
  boxes = std::move(kept);
}

RgbImage load_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open image " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P6") throw FormatError(path.string() + ": not a binary PPM");
  auto next_int = [&]() {
    int value = 0;
    while (true) {
      in >> std::ws;
      if (in.peek() == '#') {
        std::string comment;
        std::getline(in, comment);
        continue;
      }
      if (!(in >> value)) throw FormatError(path.string() + ": bad PPM header");
      return value;
    }
  };
  const int width = next_int();
  const int height = next_int();
  const int maxval = next_int();
  if (width < 1 || height < 1 || maxval != 255) {
    throw FormatError(path.string() + ": unsupported PPM");
  }
  in.get();
  RgbImage image(width, height);
  std::vector<unsigned char> row(static_cast<std::size_t>(width) * 3);
  for (int y = 0; y < height; ++y) {
    if (!in.read(reinterpret_cast<char*>(row.data()), row.size())) {
      throw FormatError(path.string() + ": truncated PPM");
    }
    for (int x = 0; x < width; ++x) {
      image.at(x, y) = {row[3 * x], row[3 * x + 1], row[3 * x + 2]};
    }
  }
  return image;
}

RgbImage load_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw FormatError(path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    const std::string message = png.message;
    png_image_free(&png);
    throw FormatError(path.string() + ": " + message);
  }
  RgbImage image(static_cast<int>(png.width), static_cast<int>(png.height));
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const std::size_t i = (static_cast<std::size_t>(y) * image.width() + x) * 3;
      image.at(x, y) = {buffer[i], buffer[i + 1], buffer[i + 2]};
    }
  }
  return image;
}

struct JpegReader {
  jpeg_error_mgr err;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_fail(j_common_ptr cinfo) {
  auto* reader = reinterpret_cast<JpegReader*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, reader->message);
  std::longjmp(reader->jump, 1);
}

RgbImage load_jpeg(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::vector<unsigned char> pixels;
  JpegReader reader{};
  jpeg_decompress_struct cinfo{};
  cinfo.err = jpeg_std_error(&reader.err);
  reader.err.error_exit = jpeg_fail;
  // Only C calls between setjmp and the end of decoding.
  if (setjmp(reader.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw FormatError(path.string() + ": " + reader.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(bytes.data()),
               static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const std::size_t stride = static_cast<std::size_t>(cinfo.output_width) * 3;
  pixels.resize(stride * cinfo.output_height);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = pixels.data() + stride * cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  const int width = static_cast<int>(cinfo.output_width);
  const int height = static_cast<int>(cinfo.output_height);
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);

  RgbImage image(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = stride * y + static_cast<std::size_t>(x) * 3;
      image.at(x, y) = {pixels[i], pixels[i + 1], pixels[i + 2]};
    }
  }
  return image;
}

}  // namespace

// ----- windows files -----

std::vector<WindowsRecord> parse_windows(std::string_view text,
                                         const LoadOptions& options,
                                         std::vector<std::string>* warnings) {
  std::vector<WindowsRecord> records;
  std::set<std::string> seen;
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    const std::string where = line_prefix(line_number);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(where + "invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw FormatError(where + "expected a JSON object");
    WindowsRecord record;
    if (!j.contains("image_id") || !j["image_id"].is_string() ||
        j["image_id"].get<std::string>().empty()) {
      throw FormatError(where + "missing or empty 'image_id'");
    }
    record.meta.image_id = j["image_id"].get<std::string>();
    for (const char* key : {"width", "height"}) {
      if (!j.contains(key) || !j[key].is_number_integer() || j[key].get<int>() < 1) {
        throw FormatError(where + "'" + key + "' must be a positive integer");
      }
    }
    record.meta.width = j["width"].get<int>();
    record.meta.height = j["height"].get<int>();
    if (j.contains("scene") && !j["scene"].is_null()) {
      if (!j["scene"].is_string()) throw FormatError(where + "'scene' must be a string");
      record.meta.scene_label = j["scene"].get<std::string>();
    }
    if (!seen.insert(record.meta.image_id).second) {
      throw FormatError(where + "duplicate image_id '" + record.meta.image_id + "'");
    }
    if (!j.contains("boxes") || !j["boxes"].is_array()) {
      throw FormatError(where + "'boxes' must be an array");
    }
    const double tol = options.clip_tolerance;
    std::size_t box_index = 0;
    for (const auto& jb : j["boxes"]) {
      const std::string box_where =
          where + "box " + std::to_string(box_index++) + ": ";
      if (!jb.is_object()) throw FormatError(box_where + "expected an object");
      RawBox box;
      box.x_min = require_number(jb, "x", box_where);
      box.y_min = require_number(jb, "y", box_where);
      box.width = require_number(jb, "w", box_where);
      box.height = require_number(jb, "h", box_where);
      if (jb.contains("source") && jb["source"].is_string()) {
        box.source = jb["source"].get<std::string>();
      }
      std::string problem;
      if (jb.contains("color") && !jb["color"].is_null()) {
        if (!jb["color"].is_number_integer() || jb["color"].get<int>() < 0 ||
            jb["color"].get<int>() >= kNumColors) {
          problem = "color must be an integer in 0..10";
        } else {
          box.color_label = jb["color"].get<int>();
        }
      }
      const bool finite = std::isfinite(box.x_min) && std::isfinite(box.y_min) &&
                          std::isfinite(box.width) && std::isfinite(box.height);
      if (problem.empty() && (!finite || !(box.width > 0) || !(box.height > 0))) {
        problem = "non-positive or non-finite geometry";
      }
      if (problem.empty() &&
          (box.x_min < -tol || box.y_min < -tol ||
           box.x_min + box.width > record.meta.width + tol ||
           box.y_min + box.height > record.meta.height + tol)) {
        problem = "box exceeds the image bounds";
      }
      if (problem.empty()) {
        const auto clipped = clip_box(box, record.meta);
        if (!clipped) {
          problem = "box has no area inside the image";
        } else {
          box = *clipped;
        }
      }
      if (!problem.empty()) {
        if (warnings != nullptr) {
          warnings->push_back(box_where + problem + "; box rejected");
        }
        continue;
      }
      record.boxes.push_back(std::move(box));
    }
    apply_cap(record.boxes, options.box_cap);
    records.push_back(std::move(record));
    if (end == text.size()) break;
  }
  return records;
}

std::vector<WindowsRecord> load_windows(const std::filesystem::path& path,
                                        const LoadOptions& options,
                                        std::vector<std::string>* warnings) {
  return parse_windows(read_file(path), options, warnings);
}

std::string windows_to_jsonl(std::span<const WindowsRecord> records) {
  std::string out;
  for (const auto& r : records) {
    json j;
    j["image_id"] = r.meta.image_id;
    j["width"] = r.meta.width;
    j["height"] = r.meta.height;
    if (r.meta.scene_label) j["scene"] = *r.meta.scene_label;
    json boxes = json::array();
    for (const auto& b : r.boxes) {
      json jb{{"x", b.x_min}, {"y", b.y_min}, {"w", b.width}, {"h", b.height}};
      if (b.color_label) jb["color"] = *b.color_label;
      if (b.source) jb["source"] = *b.source;
      boxes.push_back(std::move(jb));
    }
    j["boxes"] = std::move(boxes);
    out += j.dump();
    out += '\n';
  }
  return out;
}

void save_windows(const std::filesystem::path& path,
                  std::span<const WindowsRecord> records) {
  save_text(path, windows_to_jsonl(records));
}

RawBox polygon_to_bbox(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) {
    throw InvalidGeometry("polygon needs at least 3 points");
  }
  double x0 = points[0].first, x1 = x0;
  double y0 = points[0].second, y1 = y0;
  for (const auto& [x, y] : points) {
    if (!std::isfinite(x) || !std::isfinite(y)) {
      throw InvalidGeometry("polygon has non-finite coordinates");
    }
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  if (!(x1 > x0) || !(y1 > y0)) {
    throw InvalidGeometry("polygon has a zero-area bounding box");
  }
  RawBox box;
  box.x_min = x0;
  box.y_min = y0;
  box.width = x1 - x0;
  box.height = y1 - y0;
  return box;
}

std::vector<SyntaxMatrix> syntax_from_records(
    std::span<const WindowsRecord> records,
    const std::optional<std::filesystem::path>& images_dir,
    std::vector<std::string>* warnings) {
  std::vector<SyntaxMatrix> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const bool needs_pixels = std::any_of(
        r.boxes.begin(), r.boxes.end(),
        [](const RawBox& b) { return !b.color_label.has_value(); });
    std::optional<RgbImage> image;
    if (needs_pixels && images_dir) {
      for (const char* ext : {".png", ".jpg", ".jpeg", ".ppm"}) {
        const auto candidate = *images_dir / (r.meta.image_id + ext);
        if (std::filesystem::exists(candidate)) {
          image = load_image(candidate);
          break;
        }
      }
    }
    out.push_back(build_syntax(r.boxes, r.meta, image ? &*image : nullptr,
                               warnings));
  }
  return out;
}

std::map<std::string, std::string> scene_labels(
    std::span<const WindowsRecord> records) {
  std::map<std::string, std::string> labels;
  for (const auto& r : records) {
    if (r.meta.scene_label) labels[r.meta.image_id] = *r.meta.scene_label;
  }
  return labels;
}

RgbImage load_image(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw FormatError("cannot open image " + path.string());
  unsigned char magic[2] = {0, 0};
  probe.read(reinterpret_cast<char*>(magic), 2);
  probe.close();
  if (magic[0] == 'P' && magic[1] == '6') return load_ppm(path);
  if (magic[0] == 0xFF && magic[1] == 0xD8) return load_jpeg(path);
  return load_png(path);
}

bool DatasetSplit::disjoint() const {
  const std::set<std::string> h(holdout.begin(), holdout.end());
  return std::none_of(test.begin(), test.end(),
                      [&](const std::string& id) { return h.count(id) != 0; });
}

DatasetSplit split_dataset(std::span<const WindowsRecord> records,
                           std::size_t holdout_per_scene, std::uint64_t seed) {
  std::map<std::string, std::vector<std::string>> by_scene;
  for (const auto& r : records) {
    by_scene[r.meta.scene_label.value_or("")].push_back(r.meta.image_id);
  }
  std::mt19937_64 rng(seed);
  DatasetSplit split;
  for (auto& [scene, ids] : by_scene) {
    std::shuffle(ids.begin(), ids.end(), rng);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      (i < holdout_per_scene ? split.holdout : split.test).push_back(ids[i]);
    }
  }
  std::sort(split.holdout.begin(), split.holdout.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

// ----- model files -----

json boundaries_to_json(const BinBoundaries& b) {
  json cuts;
  for (int p = 0; p < kNumContinuous; ++p) cuts[std::string(kCutKeys[p])] = b.cuts[p];
  return json{{"B", b.bins}, {"cuts", cuts}};
}

BinBoundaries boundaries_from_json(const json& j) {
  BinBoundaries b;
  b.bins = get_field<int>(j, "B");
  const json cuts = get_field<json>(j, "cuts");
  for (int p = 0; p < kNumContinuous; ++p) {
    b.cuts[p] = get_field<std::vector<double>>(cuts, std::string(kCutKeys[p]).c_str());
  }
  try {
    b.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid boundaries: ") + e.what());
  }
  return b;
}

json gmm_to_json(const GmmModel& m) {
  json options{{"max_iterations", m.options.max_iterations},
               {"tolerance", m.options.tolerance},
               {"variance_floor", m.options.variance_floor}};
  json fit{{"iterations", m.iterations},
           {"converged", m.converged},
           {"log_likelihood", m.log_likelihood_history},
           {"reseeded_at", m.reseeded_at}};
  return json{{"K", m.components},
              {"dimension", m.dimension},
              {"mask", m.mask.to_string()},
              {"weights", m.weights},
              {"means", matrix_to_json(m.means, m.components, m.dimension)},
              {"variances", matrix_to_json(m.variances, m.components, m.dimension)},
              {"seed", m.seed},
              {"options", options},
              {"fit", fit}};
}

GmmModel gmm_from_json(const json& j) {
  GmmModel m;
  m.components = get_field<int>(j, "K");
  m.dimension = get_field<int>(j, "dimension");
  m.mask = mask_from_json(get_field<json>(j, "mask"));
  m.weights = get_field<std::vector<double>>(j, "weights");
  m.means = matrix_from_json(get_field<json>(j, "means"), m.components,
                             m.dimension, "means");
  m.variances = matrix_from_json(get_field<json>(j, "variances"), m.components,
                                 m.dimension, "variances");
  m.seed = get_field<std::uint64_t>(j, "seed");
  const json options = get_field<json>(j, "options");
  m.options.max_iterations = get_field<int>(options, "max_iterations");
  m.options.tolerance = get_field<double>(options, "tolerance");
  m.options.variance_floor = get_field<double>(options, "variance_floor");
  m.options.mask = m.mask;
  const json fit = get_field<json>(j, "fit");
  m.iterations = get_field<int>(fit, "iterations");
  m.converged = get_field<bool>(fit, "converged");
  m.log_likelihood_history = get_field<std::vector<double>>(fit, "log_likelihood");
  m.reseeded_at = get_field<std::vector<int>>(fit, "reseeded_at");
  try {
    m.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid GMM: ") + e.what());
  }
  return m;
}

json profile_to_json(const SceneProfile& p) {
  json j{{"scene_id", p.scene_id}, {"kind", std::string(profile_kind_name(p.kind))}};
  if (p.kind == ProfileKind::kStatementHistogram) {
    j["B"] = p.histogram.bins;
    j["mask"] = p.histogram.mask.to_string();
    j["payload"] = p.histogram.counts;
  } else {
    j["K"] = p.components;
    j["fv_options"] = json{{"average", p.fisher.options.average},
                           {"signed_sqrt", p.fisher.options.signed_sqrt},
                           {"l2", p.fisher.options.l2}};
    j["payload"] = p.fisher.values;
  }
  return j;
}

SceneProfile profile_from_json(const json& j) {
  SceneProfile p;
  p.scene_id = get_field<std::string>(j, "scene_id");
  try {
    p.kind = profile_kind_from_name(get_field<std::string>(j, "kind"));
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  }
  if (p.kind == ProfileKind::kStatementHistogram) {
    p.histogram.bins = get_field<int>(j, "B");
    p.histogram.mask = mask_from_json(get_field<json>(j, "mask"));
    p.histogram.counts = get_field<std::vector<double>>(j, "payload");
    if (p.histogram.counts.size() !=
        histogram_dimension(p.histogram.bins, p.histogram.mask)) {
      throw FormatError("profile payload length does not match B and mask");
    }
  } else {
    p.components = get_field<int>(j, "K");
    const json o = get_field<json>(j, "fv_options");
    p.fisher.options = {get_field<bool>(o, "average"),
                        get_field<bool>(o, "signed_sqrt"), get_field<bool>(o, "l2")};
    p.fisher.values = get_field<std::vector<double>>(j, "payload");
  }
  return p;
}

json prior_to_json(const PriorModel& prior) {
  return json{{"B", prior.bins},
              {"mask", prior.mask.to_string()},
              {"alpha", prior.alpha},
              {"probs", prior.probs}};
}

PriorModel prior_from_json(const json& j) {
  PriorModel prior;
  prior.bins = get_field<int>(j, "B");
  prior.mask = mask_from_json(get_field<json>(j, "mask"));
  prior.alpha = get_field<double>(j, "alpha");
  prior.probs = get_field<std::vector<double>>(j, "probs");
  if (prior.probs.size() != histogram_dimension(prior.bins, prior.mask)) {
    throw FormatError("prior length does not match B and mask");
  }
  return prior;
}

std::string seal_model(std::string_view kind, const json& payload) {
  const std::string body = payload.dump();
  json envelope{{"format", "thingsyntax." + std::string(kind)},
                {"version", kModelFormatVersion},
                {"payload", payload},
                {"checksum", "fnv1a64:" + hex_digest(fnv1a64(body))}};
  return envelope.dump() + "\n";
}

json unseal_model(std::string_view kind, std::string_view text) {
  json envelope;
  try {
    envelope = json::parse(text);
  } catch (const json::parse_error&) {
    throw FormatError("corrupt or truncated model file (checksum unverifiable)");
  }
  const std::string expected = "thingsyntax." + std::string(kind);
  if (!envelope.is_object() || !envelope.contains("format") ||
      envelope["format"] != expected) {
    throw FormatError("not a " + expected + " file");
  }
  if (!envelope.contains("version") || envelope["version"] != kModelFormatVersion) {
    throw FormatError("unsupported " + expected + " version " +
                      (envelope.contains("version") ? envelope["version"].dump()
                                                    : std::string("<none>")) +
                      " (expected " + std::to_string(kModelFormatVersion) + ")");
  }
  if (!envelope.contains("payload") || !envelope.contains("checksum")) {
    throw FormatError("model file lacks payload or checksum");
  }
  const std::string actual =
      "fnv1a64:" + hex_digest(fnv1a64(envelope["payload"].dump()));
  if (envelope["checksum"] != actual) {
    throw FormatError("checksum mismatch in " + expected + " file");
  }
  return envelope["payload"];
}

void save_boundaries(const std::filesystem::path& path, const BinBoundaries& b) {
  save_text(path, seal_model("boundaries", boundaries_to_json(b)));
}
BinBoundaries load_boundaries(const std::filesystem::path& path) {
  return boundaries_from_json(unseal_model("boundaries", read_file(path)));
}
void save_gmm(const std::filesystem::path& path, const GmmModel& model) {
  save_text(path, seal_model("gmm", gmm_to_json(model)));
}
GmmModel load_gmm(const std::filesystem::path& path) {
  return gmm_from_json(unseal_model("gmm", read_file(path)));
}
void save_profile(const std::filesystem::path& path, const SceneProfile& profile) {
  save_text(path, seal_model("profile", profile_to_json(profile)));
}
SceneProfile load_profile(const std::filesystem::path& path) {
  return profile_from_json(unseal_model("profile", read_file(path)));
}
void save_prior(const std::filesystem::path& path, const PriorModel& prior) {
  save_text(path, seal_model("prior", prior_to_json(prior)));
}
PriorModel load_prior(const std::filesystem::path& path) {
  return prior_from_json(unseal_model("prior", read_file(path)));
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex_digest(std::uint64_t value) {
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(value));
  return buffer;
}

std::string file_digest(const std::filesystem::path& path) {
  return "fnv1a64:" + hex_digest(fnv1a64(read_file(path)));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw FormatError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// ----- synthetic scenes -----

const std::vector<Archetype>& builtin_archetypes() {
  static const std::vector<Archetype> archetypes = [] {
    const int grey = *color_from_name("grey");
    const int white = *color_from_name("white");
    const int brown = *color_from_name("brown");
    const int black = *color_from_name("black");
    const int red = *color_from_name("red");
    const int yellow = *color_from_name("yellow");
    const int blue = *color_from_name("blue");
    const int green = *color_from_name("green");
    const int orange = *color_from_name("orange");
    std::vector<Archetype> out;
    out.push_back(Archetype{
        "corridor",
        {"Grey large tall thing at center middle",
         "Grey large tall thing at bottom middle",
         "Grey large tall thing at top middle",
         "Brown large tall thing at center middle",
         "White large tall thing at center middle"},
        {
            {{0.44, 0.15, 0.06, 0.70, grey}, {0.50, 0.20, 0.05, 0.60, white},
             {0.53, 0.25, 0.04, 0.50, brown}},
            {{0.45, 0.10, 0.08, 0.80, grey}, {0.48, 0.30, 0.04, 0.40, brown},
             {0.52, 0.20, 0.05, 0.60, grey}, {0.40, 0.25, 0.05, 0.50, white}},
            {{0.47, 0.20, 0.06, 0.60, white}, {0.50, 0.15, 0.07, 0.70, grey},
             {0.55, 0.30, 0.04, 0.40, black}},
        }});
    out.push_back(Archetype{
        "shelfscape",
        {"White small wide thing at top right",
         "Green small wide thing at top left",
         "Yellow small wide thing at bottom left",
         "Blue small wide thing at bottom right",
         "Red small wide thing at top right"},
        {
            {{0.05, 0.22, 0.25, 0.05, red}, {0.55, 0.47, 0.30, 0.06, yellow},
             {0.30, 0.72, 0.25, 0.06, blue}},
            {{0.10, 0.23, 0.20, 0.04, green}, {0.60, 0.23, 0.25, 0.05, orange},
             {0.20, 0.48, 0.30, 0.05, blue}, {0.50, 0.73, 0.30, 0.05, red}},
            {{0.35, 0.22, 0.30, 0.06, yellow}, {0.05, 0.47, 0.25, 0.05, brown},
             {0.65, 0.72, 0.25, 0.05, white}},
        }});
    return out;
  }();
  return archetypes;
}

const Archetype& archetype(std::string_view name) {
  for (const auto& a : builtin_archetypes()) {
    if (a.name == name) return a;
  }
  throw ConfigError("unknown archetype '" + std::string(name) + "'");
}

std::vector<WindowsRecord> generate_synthetic(
    std::span<const std::string> archetypes, std::size_t images_per_class,
    std::uint64_t seed) {
  if (archetypes.empty()) throw ConfigError("generate_synthetic: no archetypes");
  constexpr int kWidth = 640;
  constexpr int kHeight = 480;
  const int grey = *color_from_name("grey");
  const int white = *color_from_name("white");
  const int brown = *color_from_name("brown");
  const int black = *color_from_name("black");
  const std::vector<int> shelf_colors = {
      *color_from_name("red"),    *color_from_name("yellow"),
      *color_from_name("blue"),   *color_from_name("orange"),
      *color_from_name("green"),  brown, white};

  std::vector<WindowsRecord> out;
  for (std::size_t a = 0; a < archetypes.size(); ++a) {
    const std::string& name = archetype(archetypes[a]).name;
    const bool corridor = name == "corridor";
    std::seed_seq sequence{static_cast<std::uint32_t>(seed),
                           static_cast<std::uint32_t>(seed >> 32),
                           static_cast<std::uint32_t>(corridor ? 1 : 2)};
    std::mt19937_64 rng(sequence);
    auto uniform = [&](double lo, double hi) {
      return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    auto normal = [&](double mean, double sd) {
      return std::normal_distribution<double>(mean, sd)(rng);
    };
    std::uniform_int_distribution<int> box_count(5, 30);
    for (std::size_t i = 0; i < images_per_class; ++i) {
      WindowsRecord record;
      record.meta.image_id =
          name + "-" + std::to_string(seed) + "-" + std::to_string(i);
      record.meta.width = kWidth;
      record.meta.height = kHeight;
      record.meta.scene_label = name;
      const int n = box_count(rng);
      for (int b = 0; b < n; ++b) {
        double w = 0.0, h = 0.0, cx = 0.0, cy = 0.0;
        int color = 0;
        if (corridor) {
          // Tall things near the horizontal middle.
          h = uniform(0.3, 0.9) * kHeight;
          const double ratio = uniform(0.05, 0.18);
          w = 2.0 * ratio * h;
          cx = std::clamp(normal(0.5, 0.05), 0.0, 1.0) * kWidth;
          cy = std::clamp(normal(0.5, 0.08), 0.0, 1.0) * kHeight;
          const double u = uniform(0.0, 1.0);
          color = u < 0.4 ? grey : u < 0.65 ? white : u < 0.9 ? brown : black;
        } else {
          // Wide things stacked on three shelf levels.
          w = uniform(0.1, 0.35) * kWidth;
          h = uniform(0.08, 0.35) * w;
          const int level = std::uniform_int_distribution<int>(0, 2)(rng);
          cy = std::clamp(normal(0.25 * (level + 1), 0.03), 0.0, 1.0) * kHeight;
          cx = uniform(w / 2, kWidth - w / 2);
          color = shelf_colors[std::uniform_int_distribution<std::size_t>(
              0, shelf_colors.size() - 1)(rng)];
        }
        RawBox box;
        box.width = w;
        box.height = h;
        box.x_min = std::clamp(cx - w / 2, 0.0, kWidth - w);
        box.y_min = std::clamp(cy - h / 2, 0.0, kHeight - h);
        box.color_label = color;
        box.source = "annotation";
        record.boxes.push_back(box);
      }
      out.push_back(std::move(record));
    }
  }
  return out;
}

// ----- query files -----

std::map<std::string, std::vector<std::string>> parse_statement_queries(
    std::string_view text) {
  std::map<std::string, std::vector<std::string>> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') {
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw FormatError(line_prefix(line_number) +
                        "expected '<scene>\\t<statement>'");
    }
    out[line.substr(0, tab)].push_back(line.substr(tab + 1));
  }
  return out;
}

std::string statement_queries_text(
    const std::map<std::string, std::vector<std::string>>& queries) {
  std::string out;
  for (const auto& [scene, statements] : queries) {
    for (const auto& s : statements) out += scene + "\t" + s + "\n";
  }
  return out;
}

Block block_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("block must be a JSON object");
  Block b;
  for (const char* key : {"x", "y", "w", "h"}) {
    if (!j.contains(key) || !j.at(key).is_number()) {
      throw InvalidInput(std::string("block field '") + key + "' must be a number");
    }
  }
  b.x = j["x"].get<double>();
  b.y = j["y"].get<double>();
  b.w = j["w"].get<double>();
  b.h = j["h"].get<double>();
  if (!j.contains("color") || !j["color"].is_string()) {
    throw InvalidInput("block field 'color' must be a color name or \"any\"");
  }
  const std::string color = j["color"].get<std::string>();
  if (color == "any" || color == "Any") {
    b.color = Statement::kAnyColor;
  } else {
    const auto index = color_from_name(color);
    if (!index) throw InvalidInput("unknown block color '" + color + "'");
    b.color = *index;
  }
  validate_block(b);
  return b;
}

json block_to_json(const Block& b) {
  return json{{"x", b.x},
              {"y", b.y},
              {"w", b.w},
              {"h", b.h},
              {"color", b.color == Statement::kAnyColor
                            ? std::string("any")
                            : std::string(color_names()[b.color])}};
}

std::map<std::string, std::vector<BlockIllustration>> parse_block_queries(
    std::string_view text) {
  std::map<std::string, std::vector<BlockIllustration>> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = line_prefix(line_number);
    try {
      const json j = json::parse(line);
      if (!j.contains("scene") || !j["scene"].is_string() ||
          !j.contains("blocks") || !j["blocks"].is_array()) {
        throw FormatError(where + "expected {\"scene\": str, \"blocks\": [...]}");
      }
      BlockIllustration illustration;
      for (const auto& jb : j["blocks"]) illustration.push_back(block_from_json(jb));
      out[j["scene"].get<std::string>()].push_back(std::move(illustration));
    } catch (const json::exception& e) {
      throw FormatError(where + e.what());
    } catch (const InvalidInput& e) {
      throw FormatError(where + e.what());
    } catch (const InvalidGeometry& e) {
      throw FormatError(where + e.what());
    }
  }
  return out;
}

std::string block_queries_text(
    const std::map<std::string, std::vector<BlockIllustration>>& queries) {
  std::string out;
  for (const auto& [scene, illustrations] : queries) {
    for (const auto& illustration : illustrations) {
      json blocks = json::array();
      for (const auto& b : illustration) blocks.push_back(block_to_json(b));
      out += json{{"scene", scene}, {"blocks", blocks}}.dump() + "\n";
    }
  }
  return out;
}

}  // namespace thingsyntax
