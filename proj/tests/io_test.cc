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

#include <cstddef>
#include <cstdio>

#include <jpeglib.h>
#include <png.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "thingsyntax/analysis.h"
#include "thingsyntax/errors.h"
#include "thingsyntax/io.h"

using namespace thingsyntax;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("thingsyntax_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

GmmModel small_model() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> xs(200, std::vector<double>(5));
  for (auto& x : xs) {
    for (double& v : x) v = u(rng);
  }
  return fit_gmm(xs, 3, 11);
}

}  // namespace

TEST_CASE("windows files") {
  CHECK(parse_windows("").empty());

  const std::string line =
      R"({"image_id":"a","width":100,"height":80,"scene":"beach","boxes":[)"
      R"({"x":0,"y":0,"w":10,"h":10,"color":1},{"x":5,"y":5,"w":20,"h":20,"color":2},)"
      R"({"x":50,"y":40,"w":30,"h":30,"color":3},{"x":90,"y":70,"w":50,"h":50,"color":4}]})";
  std::vector<std::string> warnings;
  const auto records = parse_windows(line + "\n", {}, &warnings);
  REQUIRE(records.size() == 1);
  CHECK(records[0].boxes.size() == 3);
  CHECK(warnings.size() == 1);
  CHECK(records[0].meta.scene_label == "beach");

  const auto again = parse_windows(windows_to_jsonl(records));
  REQUIRE(again.size() == 1);
  CHECK(again[0].boxes == records[0].boxes);
  CHECK(again[0].meta.width == 100);

  CHECK_THROWS_AS(parse_windows("{not json}\n"), FormatError);
  CHECK_THROWS_AS(parse_windows(line + "\n" + line + "\n"), FormatError);
  try {
    parse_windows(line + "\n{\"image_id\":\"b\"}\n");
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("box cap keeps the largest boxes") {
  std::string line = R"({"image_id":"a","width":100,"height":100,"boxes":[)";
  for (int i = 1; i <= 5; ++i) {
    if (i > 1) line += ",";
    line += R"({"x":0,"y":0,"w":)" + std::to_string(i * 10) + R"(,"h":10,"color":0})";
  }
  line += "]}";
  LoadOptions options;
  options.box_cap = 2;
  const auto records = parse_windows(line, options);
  REQUIRE(records[0].boxes.size() == 2);
  CHECK(records[0].boxes[0].width == 40);
  CHECK(records[0].boxes[1].width == 50);
}

TEST_CASE("polygon to box") {
  std::vector<std::pair<double, double>> tri = {{0, 0}, {4, 0}, {0, 3}};
  const RawBox b = polygon_to_bbox(tri);
  CHECK(b.x_min == 0);
  CHECK(b.y_min == 0);
  CHECK(b.width == 4);
  CHECK(b.height == 3);
  std::vector<std::pair<double, double>> rect = {{2, 3}, {7, 3}, {7, 9}, {2, 9}};
  CHECK(polygon_to_bbox(rect) == RawBox{2, 3, 5, 6, {}, {}});

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-50, 50);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::pair<double, double>> pts(3 + t % 7);
    double lx = 1e9, hx = -1e9, ly = 1e9, hy = -1e9;
    for (auto& [x, y] : pts) {
      x = u(rng);
      y = u(rng);
      lx = std::min(lx, x);
      hx = std::max(hx, x);
      ly = std::min(ly, y);
      hy = std::max(hy, y);
    }
    const RawBox r = polygon_to_bbox(pts);
    CHECK(r.x_min == lx);
    CHECK(r.y_min == ly);
    CHECK(r.width == doctest::Approx(hx - lx));
    CHECK(r.height == doctest::Approx(hy - ly));
  }
  CHECK_THROWS_AS(polygon_to_bbox(std::vector<std::pair<double, double>>{{0, 0}, {1, 1}}),
                  InvalidGeometry);
}

TEST_CASE("model files round trip") {
  const fs::path dir = scratch_dir("models");
  const GmmModel model = small_model();
  save_gmm(dir / "gmm.json", model);
  CHECK(load_gmm(dir / "gmm.json") == model);

  std::mt19937_64 rng(3);
  std::vector<SyntaxMatrix> holdout = {SyntaxMatrix{"h", {}}};
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    holdout[0].rows.push_back({u(rng), u(rng), u(rng), u(rng) * 0.99, i % 11});
  }
  const BinBoundaries b = fit_boundaries(holdout, 4);
  save_boundaries(dir / "b.json", b);
  CHECK(load_boundaries(dir / "b.json") == b);

  const PriorModel prior = estimate_prior(histogram_from_syntax(holdout[0], b), 1.0);
  save_prior(dir / "p.json", prior);
  CHECK(load_prior(dir / "p.json") == prior);

  std::vector<std::string> texts = {"Green small squared thing at top middle"};
  const SceneProfile sp = build_statement_profile("park", texts, 3);
  save_profile(dir / "s.json", sp);
  CHECK(load_profile(dir / "s.json") == sp);

  std::vector<BlockIllustration> ill = {{Block{0.1, 0.1, 0.2, 0.3, 2}}};
  const SceneProfile fp = build_block_profile("park", ill, model);
  save_profile(dir / "f.json", fp);
  CHECK(load_profile(dir / "f.json") == fp);
}

TEST_CASE("damaged model files are refused") {
  const fs::path dir = scratch_dir("damaged");
  save_gmm(dir / "gmm.json", small_model());
  const std::string text = read_file(dir / "gmm.json");

  write_file(dir / "truncated.json", text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(load_gmm(dir / "truncated.json"), FormatError);

  nlohmann::json j = nlohmann::json::parse(text);
  j["payload"]["weights"][0] = 0.5;
  write_file(dir / "tampered.json", j.dump());
  try {
    load_gmm(dir / "tampered.json");
    FAIL("expected a checksum failure");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("checksum") != std::string::npos);
  }

  j = nlohmann::json::parse(text);
  j["version"] = 99;
  write_file(dir / "future.json", j.dump());
  CHECK_THROWS_AS(load_gmm(dir / "future.json"), FormatError);
  CHECK_THROWS_AS(load_boundaries(dir / "gmm.json"), FormatError);
  CHECK_THROWS_AS(load_gmm(dir / "missing.json"), FormatError);
}

TEST_CASE("profile saved at one B refuses another") {
  const fs::path dir = scratch_dir("cross");
  std::vector<std::string> texts = {"Blue large wide thing at top right"};
  save_profile(dir / "p.json", build_statement_profile("s", texts, 3));
  const SceneProfile loaded = load_profile(dir / "p.json");
  const StatementHistogram five(5, PropertyMask::all());
  CHECK_THROWS_AS(dap_score(five, loaded, uniform_prior(5)), DimensionMismatch);
}

TEST_CASE("image loading") {
  const fs::path dir = scratch_dir("images");
  {
    std::ofstream ppm(dir / "a.ppm", std::ios::binary);
    ppm << "P6\n2 1\n255\n";
    const unsigned char px[] = {0, 255, 0, 0, 0, 255};
    ppm.write(reinterpret_cast<const char*>(px), sizeof(px));
  }
  const RgbImage a = load_image(dir / "a.ppm");
  CHECK(a.width() == 2);
  CHECK(a.at(0, 0) == Rgb{0, 255, 0});
  CHECK(a.at(1, 0) == Rgb{0, 0, 255});

  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = 3;
  image.height = 2;
  image.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buffer(3 * 2 * 3, 0);
  buffer[3 * 4] = 255;  // pixel (1,1) red
  REQUIRE(png_image_write_to_file(&image, (dir / "b.png").c_str(), 0, buffer.data(), 0,
                                  nullptr));
  const RgbImage b = load_image(dir / "b.png");
  CHECK(b.height() == 2);
  CHECK(b.at(1, 1) == Rgb{255, 0, 0});
  CHECK(b.at(0, 0) == Rgb{0, 0, 0});
  CHECK_THROWS_AS(load_image(dir / "nope.png"), FormatError);

  {
    jpeg_compress_struct cinfo{};
    jpeg_error_mgr jerr{};
    cinfo.err = jpeg_std_error(&jerr);
    jpeg_create_compress(&cinfo);
    FILE* f = std::fopen((dir / "c.jpg").c_str(), "wb");
    REQUIRE(f);
    jpeg_stdio_dest(&cinfo, f);
    cinfo.image_width = 16;
    cinfo.image_height = 8;
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, 95, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    std::vector<unsigned char> row(16 * 3);
    for (int x = 0; x < 16; ++x) row[x * 3 + 1] = 160;
    while (cinfo.next_scanline < cinfo.image_height) {
      JSAMPROW r = row.data();
      jpeg_write_scanlines(&cinfo, &r, 1);
    }
    jpeg_finish_compress(&cinfo);
    std::fclose(f);
    jpeg_destroy_compress(&cinfo);
  }
  const RgbImage c = load_image(dir / "c.jpg");
  CHECK(c.width() == 16);
  CHECK(c.height() == 8);
  CHECK(dominant_color(c.pixels()) == *color_from_name("green"));
  write_file(dir / "broken.jpg", std::string("\xFF\xD8\xFF\xE0garbage", 10));
  CHECK_THROWS_AS(load_image(dir / "broken.jpg"), FormatError);
}

TEST_CASE("synthetic generator") {
  const std::vector<std::string> names = {"corridor", "shelfscape"};
  const auto a = generate_synthetic(names, 10, 5);
  CHECK(windows_to_jsonl(a) == windows_to_jsonl(generate_synthetic(names, 10, 5)));
  CHECK(a.size() == 20);

  const std::vector<std::string> corridor = {"corridor"};
  const auto many = generate_synthetic(corridor, 100, 1);
  const auto syntax = syntax_from_records(many);
  double sum = 0.0;
  int n = 0;
  for (const auto& m : syntax) {
    for (const auto& w : m.rows) {
      if (n == 1000) break;
      sum += w.ratio;
      ++n;
    }
  }
  REQUIRE(n == 1000);
  CHECK(sum / n < 0.2);

  const auto both = syntax_from_records(generate_synthetic(names, 50, 2));
  std::vector<SyntaxMatrix> c(both.begin(), both.begin() + 50);
  std::vector<SyntaxMatrix> s(both.begin() + 50, both.end());
  CHECK(both[0].image_id.rfind("corridor", 0) == 0);
  CHECK(both[50].image_id.rfind("shelfscape", 0) == 0);
  CHECK(kl_divergence(property_distribution(c, Property::kRatio),
                      property_distribution(s, Property::kRatio)) > 0.1);
  CHECK_THROWS_AS(generate_synthetic(std::vector<std::string>{"moon"}, 1, 1), ConfigError);
}

TEST_CASE("query files") {
  const auto statements = parse_statement_queries(
      "# comment\ncorridor\tGrey large tall thing at center middle\n"
      "corridor\tBrown large tall thing at center middle\n");
  CHECK(statements.at("corridor").size() == 2);
  CHECK(parse_statement_queries(statement_queries_text(statements)) == statements);

  const auto blocks = parse_block_queries(
      R"({"scene":"beach","blocks":[{"x":0.1,"y":0.2,"w":0.3,"h":0.4,"color":"any"}]})");
  REQUIRE(blocks.at("beach").size() == 1);
  CHECK(blocks.at("beach")[0][0].color == Statement::kAnyColor);
  CHECK(block_to_json(blocks.at("beach")[0][0])["color"] == "any");
  CHECK_THROWS(block_from_json(nlohmann::json{{"x", 0.1}, {"y", 0.1}, {"w", 0.1},
                                              {"h", 0.1}, {"color", "mauve"}}));
}

TEST_CASE("dataset split is disjoint") {
  const std::vector<std::string> names = {"corridor", "shelfscape"};
  const auto records = generate_synthetic(names, 20, 3);
  const DatasetSplit split = split_dataset(records, 5, 9);
  CHECK(split.holdout.size() == 10);
  CHECK(split.test.size() == 30);
  CHECK(split.disjoint());
}
