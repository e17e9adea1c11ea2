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

#include "thingsyntax/service.h"

#include "httplib.h"
#include "json.hpp"
#include "thingsyntax/errors.h"

namespace thingsyntax {
namespace {

using nlohmann::json;

HttpResponse error_response(int status, const std::string& code,
                            const std::string& message, json extra = json::object()) {
  json error{{"code", code}, {"message", message}};
  for (auto& [key, value] : extra.items()) error[key] = value;
  return {status, json{{"error", error}}.dump()};
}

HttpResponse not_loaded() {
  return error_response(503, "index-not-loaded", "no index is loaded");
}

json window_to_json(const ThingWindow& w) {
  return json::array({w.x, w.y, w.size, w.ratio, w.color});
}

ThingWindow window_from_json(const json& j) {
  if (!j.is_array() || j.size() != 5) {
    throw FormatError("index window must be [x, y, size, ratio, color]");
  }
  ThingWindow w;
  w.x = j[0].get<double>();
  w.y = j[1].get<double>();
  w.size = j[2].get<double>();
  w.ratio = j[3].get<double>();
  w.color = j[4].get<int>();
  return w;
}

}  // namespace

void precompute(ServiceIndex& index) {
  index.position.clear();
  index.histograms.clear();
  index.fishers.clear();
  for (std::size_t i = 0; i < index.images.size(); ++i) {
    const auto& image = index.images[i];
    if (!index.position.emplace(image.image_id, i).second) {
      throw FormatError("duplicate image id '" + image.image_id + "' in index");
    }
    index.histograms.push_back(
        histogram_from_syntax(image, index.boundaries, index.prior.mask));
    if (index.gmm) index.fishers.push_back(encode_fv(image, *index.gmm, index.fv));
  }
}

void write_service_index(const std::filesystem::path& dir,
                         std::span<const SyntaxMatrix> images,
                         const std::map<std::string, std::string>& labels,
                         const BinBoundaries& boundaries, const PriorModel& prior,
                         const GmmModel* gmm, double any_color_feature) {
  std::filesystem::create_directories(dir);
  save_boundaries(dir / "boundaries.json", boundaries);
  save_prior(dir / "prior.json", prior);
  if (gmm != nullptr) {
    save_gmm(dir / "gmm.json", *gmm);
  } else {
    std::filesystem::remove(dir / "gmm.json");
  }
  json list = json::array();
  for (const auto& image : images) {
    json windows = json::array();
    for (const auto& w : image.rows) windows.push_back(window_to_json(w));
    json entry{{"image_id", image.image_id}, {"windows", windows}};
    const auto it = labels.find(image.image_id);
    if (it != labels.end()) entry["scene"] = it->second;
    list.push_back(std::move(entry));
  }
  write_file(dir / "index.json",
             seal_model("index", json{{"any_color_feature", any_color_feature},
                                      {"images", list}}));
}

std::shared_ptr<const ServiceIndex> load_service_index(
    const std::filesystem::path& dir, const FvOptions& fv) {
  auto index = std::make_shared<ServiceIndex>();
  index->fv = fv;
  index->boundaries = load_boundaries(dir / "boundaries.json");
  index->prior = load_prior(dir / "prior.json");
  if (index->prior.bins != index->boundaries.bins) {
    throw FormatError("prior and boundaries disagree on B");
  }
  index->boundaries_digest = file_digest(dir / "boundaries.json");
  index->model_digests["prior"] = file_digest(dir / "prior.json");
  if (std::filesystem::exists(dir / "gmm.json")) {
    index->gmm = load_gmm(dir / "gmm.json");
    index->model_digests["gmm"] = file_digest(dir / "gmm.json");
  }
  const json payload = unseal_model("index", read_file(dir / "index.json"));
  index->model_digests["index"] = file_digest(dir / "index.json");
  try {
    index->any_color_feature = payload.at("any_color_feature").get<double>();
    for (const auto& entry : payload.at("images")) {
      SyntaxMatrix image;
      image.image_id = entry.at("image_id").get<std::string>();
      for (const auto& w : entry.at("windows")) image.rows.push_back(window_from_json(w));
      if (entry.contains("scene")) {
        index->labels[image.image_id] = entry["scene"].get<std::string>();
      }
      index->images.push_back(std::move(image));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed index.json: ") + e.what());
  }
  precompute(*index);
  return index;
}

QueryService::QueryService(std::shared_ptr<const ServiceIndex> index)
    : index_(std::move(index)) {}

void QueryService::swap_index(std::shared_ptr<const ServiceIndex> index) {
  std::lock_guard<std::mutex> lock(mutex_);
  index_ = std::move(index);
}

std::shared_ptr<const ServiceIndex> QueryService::snapshot() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return index_;
}

std::optional<std::string> QueryService::thumbnail_url(
    const std::string& image_id) const {
  if (!thumbs_dir_) return std::nullopt;
  for (const char* ext : {".jpg", ".jpeg", ".png"}) {
    if (std::filesystem::exists(*thumbs_dir_ / (image_id + ext))) {
      return "/thumbs/" + image_id + ext;
    }
  }
  return std::nullopt;
}

HttpResponse QueryService::query(std::string_view body) const {
  const auto index = snapshot();
  if (!index) return not_loaded();

  json request;
  try {
    request = json::parse(body);
  } catch (const json::parse_error& e) {
    return error_response(400, "invalid-json", e.what());
  }
  if (!request.is_object()) {
    return error_response(400, "invalid-query", "request must be a JSON object");
  }
  const bool fuse = request.value("fuse", false);
  const bool has_statements = request.contains("statements");
  const bool has_blocks = request.contains("blocks");
  if (fuse && !(has_statements && has_blocks)) {
    return error_response(400, "invalid-query",
                          "fuse requires both statements and blocks");
  }
  if (!fuse && has_statements == has_blocks) {
    return error_response(400, "invalid-query",
                          "exactly one of statements or blocks is required");
  }
  if (has_statements &&
      (!request["statements"].is_array() || request["statements"].empty())) {
    return error_response(400, "invalid-query",
                          "statements must be a non-empty array of strings");
  }
  if (has_blocks && (!request["blocks"].is_array() || request["blocks"].empty())) {
    return error_response(400, "invalid-query", "blocks must be a non-empty array");
  }
  int limit = 20;
  if (request.contains("result_limit")) {
    if (!request["result_limit"].is_number_integer() ||
        request["result_limit"].get<int>() < 1) {
      return error_response(400, "invalid-query",
                            "result_limit must be a positive integer");
    }
    limit = request["result_limit"].get<int>();
  }
  if (request.contains("B") &&
      request["B"] != json(index->boundaries.bins)) {
    return error_response(409, "index-mismatch",
                          "index uses B=" + std::to_string(index->boundaries.bins));
  }
  if (has_blocks || request.contains("K")) {
    if (!index->gmm) {
      return error_response(409, "index-mismatch", "index has no GMM for block queries");
    }
    if (request.contains("K") && request["K"] != json(index->gmm->components)) {
      return error_response(409, "index-mismatch",
                            "index uses K=" + std::to_string(index->gmm->components));
    }
  }

  ScoreMap statement_scores, block_scores;
  if (has_statements) {
    const json& list = request["statements"];
    std::vector<std::string> texts;
    for (const auto& s : list) {
      if (!s.is_string()) {
        return error_response(400, "invalid-query", "statements must be strings");
      }
      texts.push_back(s.get<std::string>());
    }
    SceneProfile profile;
    try {
      profile = build_statement_profile("query", texts, index->boundaries.bins,
                                        index->prior.mask);
    } catch (const ParseError& e) {
      return error_response(400, "parse", e.what(),
                            json{{"token", e.token()},
                                 {"position", e.position()},
                                 {"line", e.line()}});
    }
    for (std::size_t i = 0; i < index->images.size(); ++i) {
      statement_scores[index->images[i].image_id] =
          dap_score(index->histograms[i], profile, index->prior);
    }
  }
  if (has_blocks) {
    const json& list = request["blocks"];
    BlockIllustration illustration;
    for (std::size_t i = 0; i < list.size(); ++i) {
      try {
        illustration.push_back(block_from_json(list[i]));
      } catch (const Error& e) {
        return error_response(400, "invalid-block", e.what(), json{{"block", i}});
      }
    }
    const std::vector<BlockIllustration> illustrations = {illustration};
    const SceneProfile profile = build_block_profile(
        "query", illustrations, *index->gmm, index->fv, index->any_color_feature);
    for (std::size_t i = 0; i < index->images.size(); ++i) {
      block_scores[index->images[i].image_id] =
          fv_distance_score(index->fishers[i], profile);
    }
  }

  RankedList ranked;
  std::string mode;
  if (fuse) {
    ranked = fuse_rankings(statement_scores, block_scores, index->fusion);
    mode = "fused";
  } else if (has_statements) {
    ranked = rank_images(statement_scores);
    mode = "statements";
  } else {
    ranked = rank_images(block_scores);
    mode = "blocks";
  }

  json results = json::array();
  for (std::size_t r = 0; r < ranked.size() && r < static_cast<std::size_t>(limit);
       ++r) {
    json item{{"image_id", ranked[r].image_id},
              {"score", ranked[r].score},
              {"rank", r + 1}};
    if (const auto url = thumbnail_url(ranked[r].image_id)) item["thumbnail_url"] = *url;
    results.push_back(std::move(item));
  }
  return {200, json{{"mode", mode}, {"results", results},
                    {"corpus_size", index->images.size()}}
                   .dump()};
}

HttpResponse QueryService::index_info() const {
  const auto index = snapshot();
  if (!index) return not_loaded();
  json info{{"corpus_size", index->images.size()},
            {"B", index->boundaries.bins},
            {"K", index->gmm ? json(index->gmm->components) : json(nullptr)},
            {"mask", index->prior.mask.to_string()},
            {"boundaries_digest", index->boundaries_digest},
            {"model_digests", index->model_digests}};
  return {200, info.dump()};
}

HttpResponse QueryService::image_statements(std::string_view image_id) const {
  const auto index = snapshot();
  if (!index) return not_loaded();
  const auto it = index->position.find(std::string(image_id));
  if (it == index->position.end()) {
    return error_response(404, "unknown-image",
                          "no image '" + std::string(image_id) + "' in the index");
  }
  const SyntaxMatrix& image = index->images[it->second];
  const StatementHistogram& h = index->histograms[it->second];
  json nonzero = json::array();
  for (std::size_t m = 0; m < h.counts.size(); ++m) {
    if (h.counts[m] == 0.0) continue;
    json entry{{"index", m}, {"count", h.counts[m]}};
    if (h.mask.is_full()) {
      entry["statement"] = render_statement(statement_from_index(m, h.bins), h.bins);
    }
    nonzero.push_back(std::move(entry));
  }
  json out{{"image_id", image.image_id},
           {"statements", render_syntax(image, index->boundaries)},
           {"histogram", json{{"B", h.bins},
                              {"dimension", h.dimension()},
                              {"total", h.total()},
                              {"nonzero", nonzero}}}};
  return {200, out.dump()};
}

struct HttpFrontend::Impl {
  httplib::Server server;
};

HttpFrontend::HttpFrontend(QueryService& service) : impl_(std::make_unique<Impl>()) {
  auto reply = [](httplib::Response& res, const HttpResponse& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  auto& server = impl_->server;
  server.Post("/query", [&service, reply](const httplib::Request& req,
                                          httplib::Response& res) {
    reply(res, service.query(req.body));
  });
  server.Get("/index/info", [&service, reply](const httplib::Request&,
                                              httplib::Response& res) {
    reply(res, service.index_info());
  });
  server.Get(R"(/images/([^/]+)/statements)",
             [&service, reply](const httplib::Request& req, httplib::Response& res) {
               reply(res, service.image_statements(req.matches[1].str()));
             });
  if (service.thumbs_dir()) {
    server.set_mount_point("/thumbs", service.thumbs_dir()->string());
  }
}

HttpFrontend::~HttpFrontend() = default;

int HttpFrontend::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpFrontend::run() { return impl_->server.listen_after_bind(); }

void HttpFrontend::stop() { impl_->server.stop(); }

bool serve(QueryService& service, const std::string& host, int port) {
  HttpFrontend frontend(service);
  if (frontend.bind(host, port) < 0) return false;
  return frontend.run();
}

}  // namespace thingsyntax
