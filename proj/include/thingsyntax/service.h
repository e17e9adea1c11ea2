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

// HTTP query service over a prebuilt index directory.
//
// Index directory layout (written by write_service_index):
//   boundaries.json  prior.json  gmm.json (optional)  index.json
// index.json holds the corpus windows; per-image histograms and Fisher
// vectors are computed once when the index is loaded.

#ifndef THINGSYNTAX_SERVICE_H_
#define THINGSYNTAX_SERVICE_H_

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thingsyntax/encoder.h"
#include "thingsyntax/grammar.h"
#include "thingsyntax/io.h"
#include "thingsyntax/retrieval.h"

namespace thingsyntax {

struct ServiceIndex {
  BinBoundaries boundaries;
  PriorModel prior;
  std::optional<GmmModel> gmm;
  FvOptions fv;
  FusionMethod fusion = FusionMethod::kMinMaxAverage;
  double any_color_feature = 0.5;

  std::vector<SyntaxMatrix> images;
  std::map<std::string, std::string> labels;
  std::map<std::string, std::size_t> position;  // image_id -> row
  std::vector<StatementHistogram> histograms;
  std::vector<FisherVector> fishers;  // empty without a GMM

  std::string boundaries_digest;
  std::map<std::string, std::string> model_digests;
};

// Fills the derived per-image fields from `images` and the models.
void precompute(ServiceIndex& index);

void write_service_index(const std::filesystem::path& dir,
                         std::span<const SyntaxMatrix> images,
                         const std::map<std::string, std::string>& labels,
                         const BinBoundaries& boundaries, const PriorModel& prior,
                         const GmmModel* gmm, double any_color_feature);

std::shared_ptr<const ServiceIndex> load_service_index(
    const std::filesystem::path& dir, const FvOptions& fv = {});

struct HttpResponse {
  int status = 200;
  std::string body;
};

// Request handlers, independent of the transport. Every handler is const
// and reads one immutable index snapshot.
class QueryService {
 public:
  QueryService() = default;
  explicit QueryService(std::shared_ptr<const ServiceIndex> index);

  // Atomic from the point of view of requests: each request sees either the
  // old or the new index.
  void swap_index(std::shared_ptr<const ServiceIndex> index);
  std::shared_ptr<const ServiceIndex> snapshot() const;

  void set_thumbs_dir(std::optional<std::filesystem::path> dir) {
    thumbs_dir_ = std::move(dir);
  }
  const std::optional<std::filesystem::path>& thumbs_dir() const {
    return thumbs_dir_;
  }

  // POST /query
  HttpResponse query(std::string_view body) const;
  // GET /index/info
  HttpResponse index_info() const;
  // GET /images/{id}/statements
  HttpResponse image_statements(std::string_view image_id) const;

 private:
  std::optional<std::string> thumbnail_url(const std::string& image_id) const;

  mutable std::mutex mutex_;
  std::shared_ptr<const ServiceIndex> index_;
  std::optional<std::filesystem::path> thumbs_dir_;
};

// HTTP transport for a QueryService: POST /query, GET /index/info,
// GET /images/{id}/statements, and static /thumbs when a thumbs dir is set.
class HttpFrontend {
 public:
  explicit HttpFrontend(QueryService& service);
  ~HttpFrontend();
  HttpFrontend(const HttpFrontend&) = delete;
  HttpFrontend& operator=(const HttpFrontend&) = delete;

  // Port 0 picks a free port. Returns the bound port, or -1.
  int bind(const std::string& host, int port);
  // Serves until stop(); call after bind().
  bool run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Blocks serving `service` on host:port. Returns false when the socket
// cannot be bound.
bool serve(QueryService& service, const std::string& host, int port);

}  // namespace thingsyntax

#endif  // THINGSYNTAX_SERVICE_H_
