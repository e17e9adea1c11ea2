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

#ifndef THINGSYNTAX_TESTS_SUPPORT_H_
#define THINGSYNTAX_TESTS_SUPPORT_H_

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "thingsyntax/io.h"
#include "thingsyntax/service.h"

namespace thingsyntax::testing {

inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("thingsyntax_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Five images under uniform tercile cuts. Only "g" holds a bottom-middle
// large wide green thing.
inline std::vector<SyntaxMatrix> forced_corpus() {
  const int green = *color_from_name("green");
  const int red = *color_from_name("red");
  const int blue = *color_from_name("blue");
  std::vector<SyntaxMatrix> images;
  images.push_back({"a", {{0.1, 0.1, 0.1, 0.1, red}, {0.2, 0.5, 0.2, 0.5, blue}}});
  images.push_back({"b", {{0.5, 0.85, 0.8, 0.8, blue}, {0.9, 0.1, 0.1, 0.2, red}}});
  images.push_back({"c", {{0.5, 0.85, 0.1, 0.1, green}, {0.9, 0.9, 0.2, 0.5, red}}});
  images.push_back({"g", {{0.5, 0.85, 0.8, 0.8, green}, {0.1, 0.1, 0.1, 0.1, red}}});
  images.push_back({"e", {{0.85, 0.15, 0.5, 0.5, blue}, {0.2, 0.9, 0.2, 0.2, blue}}});
  return images;
}

inline GmmModel forced_gmm() {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<double>> xs(100, std::vector<double>(5));
  for (auto& x : xs) {
    for (double& v : x) v = u(rng);
  }
  return fit_gmm(xs, 2, 3);
}

inline std::filesystem::path write_forced_index(const std::string& name, bool with_gmm) {
  const auto dir = fresh_dir(name);
  const auto images = forced_corpus();
  std::map<std::string, std::string> labels;
  for (const auto& m : images) labels[m.image_id] = m.image_id == "g" ? "park" : "other";
  const GmmModel gmm = forced_gmm();
  write_service_index(dir, images, labels, BinBoundaries::uniform(3), uniform_prior(3),
                      with_gmm ? &gmm : nullptr, 0.5);
  return dir;
}

}  // namespace thingsyntax::testing

#endif  // THINGSYNTAX_TESTS_SUPPORT_H_
