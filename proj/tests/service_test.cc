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

#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "support.h"
#include "thingsyntax/errors.h"
#include "thingsyntax/service.h"

using namespace thingsyntax;
using nlohmann::json;

namespace {

json body_of(const HttpResponse& r) { return json::parse(r.body); }

}  // namespace

TEST_CASE("forced corpus ranks the constructed image first") {
  QueryService service(load_service_index(testing::write_forced_index("svc_forced", true)));
  const auto r = service.query(
      R"({"statements":["Green large wide thing at bottom middle"],"result_limit":5})");
  REQUIRE(r.status == 200);
  const json j = body_of(r);
  CHECK(j["mode"] == "statements");
  CHECK(j["corpus_size"] == 5);
  REQUIRE(j["results"].size() == 5);
  CHECK(j["results"][0]["image_id"] == "g");
  CHECK(j["results"][0]["rank"] == 1);
  CHECK(service.query(R"({"statements":["Green large wide thing at bottom middle"]})").body ==
        service.query(R"({"statements":["Green large wide thing at bottom middle"]})").body);

  const auto limited =
      body_of(service.query(R"({"statements":["Red small tall thing at top left"],"result_limit":2})"));
  CHECK(limited["results"].size() == 2);

  const auto blocks = service.query(
      R"({"blocks":[{"x":0.3,"y":0.7,"w":0.4,"h":0.3,"color":"green"}]})");
  CHECK(blocks.status == 200);
  CHECK(blocks.body == service.query(
      R"({"blocks":[{"x":0.3,"y":0.7,"w":0.4,"h":0.3,"color":"green"}]})").body);
  const auto fused = service.query(
      R"({"fuse":true,"statements":["Green large wide thing at bottom middle"],)"
      R"("blocks":[{"x":0.3,"y":0.7,"w":0.4,"h":0.3,"color":"any"}]})");
  CHECK(fused.status == 200);
  CHECK(body_of(fused)["mode"] == "fused");
}

TEST_CASE("query errors") {
  QueryService empty;
  CHECK(empty.query(R"({"statements":["x"]})").status == 503);

  QueryService service(load_service_index(testing::write_forced_index("svc_errors", false)));
  auto code = [&](const std::string& body) {
    const auto r = service.query(body);
    return std::pair{r.status, body_of(r)["error"]["code"].get<std::string>()};
  };
  CHECK(code(R"({"blocks":[]})") == std::pair{400, std::string("invalid-query")});
  CHECK(code(R"({"statements":[]})") == std::pair{400, std::string("invalid-query")});
  CHECK(code("not json") == std::pair{400, std::string("invalid-json")});
  CHECK(code(R"({"statements":["x"],"blocks":[{}]})").second == "invalid-query");
  CHECK(code(R"({"statements":["a"],"B":5})") == std::pair{409, std::string("index-mismatch")});
  CHECK(code(R"({"blocks":[{"x":0.1,"y":0.1,"w":0.1,"h":0.1,"color":"red"}]})") ==
        std::pair{409, std::string("index-mismatch")});

  const auto parse = service.query(
      R"({"statements":["Green small squared thing at top middle","Blue enormous wide thing at top right"]})");
  CHECK(parse.status == 400);
  const json e = body_of(parse)["error"];
  CHECK(e["code"] == "parse");
  CHECK(e["token"] == "enormous");
  CHECK(e["line"] == 2);

  QueryService with_gmm(load_service_index(testing::write_forced_index("svc_blocks", true)));
  const auto bad_block =
      with_gmm.query(R"({"blocks":[{"x":0.9,"y":0.1,"w":0.5,"h":0.1,"color":"red"}]})");
  CHECK(bad_block.status == 400);
  CHECK(body_of(bad_block)["error"]["code"] == "invalid-block");
}

TEST_CASE("index info and digests") {
  const auto dir = testing::write_forced_index("svc_info", true);
  QueryService service(load_service_index(dir));
  const json info = body_of(service.index_info());
  CHECK(info["corpus_size"] == 5);
  CHECK(info["B"] == load_boundaries(dir / "boundaries.json").bins);
  CHECK(info["K"] == 2);

  const json again = body_of(QueryService(load_service_index(dir)).index_info());
  CHECK(again == info);

  save_prior(dir / "prior.json", uniform_prior(3, PropertyMask::all(), 2.0));
  const json changed = body_of(QueryService(load_service_index(dir)).index_info());
  CHECK(changed["boundaries_digest"] == info["boundaries_digest"]);
  CHECK(changed["model_digests"]["prior"] != info["model_digests"]["prior"]);
  CHECK(changed["model_digests"]["gmm"] == info["model_digests"]["gmm"]);
}

TEST_CASE("synthetic index has the full corpus") {
  const std::vector<std::string> names = {"corridor", "shelfscape"};
  const auto records = generate_synthetic(names, 100, 7);
  const auto images = syntax_from_records(records);
  const auto dir = testing::fresh_dir("svc_synth");
  const BinBoundaries b = fit_boundaries(images, 3);
  write_service_index(dir, images, scene_labels(records), b, uniform_prior(3), nullptr, 0.5);
  QueryService service(load_service_index(dir));
  CHECK(body_of(service.index_info())["corpus_size"] == 200);
}

TEST_CASE("image statements") {
  const auto dir = testing::fresh_dir("svc_statements");
  const int green = *color_from_name("green");
  std::vector<SyntaxMatrix> images = {{"sq", {{0.5, 0.5, 0.1, 0.5, green}}},
                                      {"multi", testing::forced_corpus()[0].rows}};
  write_service_index(dir, images, {}, BinBoundaries::uniform(3), uniform_prior(3), nullptr,
                      0.5);
  QueryService service(load_service_index(dir));
  const json sq = body_of(service.image_statements("sq"));
  REQUIRE(sq["statements"].size() == 1);
  const std::string s = sq["statements"][0];
  CHECK(s.find("squared") != std::string::npos);
  CHECK(s.find("Green") != std::string::npos);

  const json multi = body_of(service.image_statements("multi"));
  CHECK(multi["statements"].size() == images[1].size());
  const auto texts = multi["statements"].get<std::vector<std::string>>();
  const auto h = histogram_from_statements(texts, 3);
  double total = 0.0;
  for (const auto& nz : multi["histogram"]["nonzero"]) {
    CHECK(h.counts[nz["index"].get<std::size_t>()] == nz["count"].get<double>());
    total += nz["count"].get<double>();
  }
  CHECK(total == h.total());
  CHECK(service.image_statements("missing").status == 404);
}

TEST_CASE("http frontend serves queries") {
  QueryService service(load_service_index(testing::write_forced_index("svc_http", true)));
  HttpFrontend frontend(service);
  const int port = frontend.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread server([&] { frontend.run(); });
  httplib::Client client("127.0.0.1", port);
  const std::string body = R"({"statements":["Green large wide thing at bottom middle"]})";
  auto res = client.Post("/query", body, "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(res->body == service.query(body).body);
  auto info = client.Get("/index/info");
  REQUIRE(info);
  CHECK(json::parse(info->body)["corpus_size"] == 5);
  auto stmts = client.Get("/images/g/statements");
  REQUIRE(stmts);
  CHECK(stmts->status == 200);
  auto bad = client.Post("/query", "{", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  frontend.stop();
  server.join();
}
