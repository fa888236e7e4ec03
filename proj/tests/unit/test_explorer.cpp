// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <future>
#include <thread>

#include "fixtures.hpp"
#include "motionmap/error.hpp"
#include "motionmap/explorer.hpp"
#include "motionmap/workflow.hpp"

#include <httplib.h>
#include <json.hpp>

using namespace motionmap;
using nlohmann::json;

namespace {

struct Loaded {
  Models models;
  Dataset data;
  std::uint64_t hash = 0;
};

const Loaded& loaded() {
  static const Loaded l = [] {
    Loaded out;
    const RunConfig& cfg = testing::tiny_run();
    out.models = load_models(cfg.checkpoint_path(), &out.hash);
    out.data = load_dataset(cfg);
    return out;
  }();
  return l;
}

const Explorer& explorer() {
  static const Explorer e(loaded().models, loaded().data.test, loaded().hash);
  return e;
}

HttpResponse get(const Explorer& e, const std::string& path,
                 std::map<std::string, std::string> query = {}) {
  HttpRequest r;
  r.path = path;
  r.query = std::move(query);
  return e.handle(r);
}

std::map<std::string, std::string> cell_query(int id, int row, int col) {
  return {{"sample", std::to_string(id)}, {"row", std::to_string(row)}, {"col", std::to_string(col)}};
}

}  // namespace

TEST_SUITE("explorer") {

TEST_CASE("health and sample listing") {
  const auto h = get(explorer(), "/healthz");
  CHECK(h.status == 200);
  CHECK(json::parse(h.body)["status"] == "ok");
  CHECK(json::parse(h.body)["checkpoint_hash"].get<std::uint64_t>() == loaded().hash);

  const auto s = json::parse(get(explorer(), "/api/samples").body);
  REQUIRE(s.size() == loaded().data.test.size());
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i - 1]["id"] < s[i]["id"]);
  CHECK(s[0]["T_o"] == testing::tiny_run().data.obs_frames);
  CHECK(s[0]["T_f"] == testing::tiny_run().data.future_frames);

  const Explorer empty(loaded().models, {}, 1);
  CHECK(get(empty, "/api/samples").body == "[]");
}

TEST_CASE("motionmap payload") {
  const Sample& s = loaded().data.test.front();
  const auto r = get(explorer(), "/api/motionmap", {{"sample", std::to_string(s.id)}});
  REQUIRE(r.status == 200);
  const auto j = json::parse(r.body);
  const int m = j["m"];
  CHECK(j["values"].size() == static_cast<std::size_t>(m * m));
  const Heatmap hm = loaded().models.heatmap.predict(s.observation);
  CHECK(j["values"][m + 2].get<double>() == hm.values(1, 2));
  for (std::size_t i = 1; i < j["modes"].size(); ++i) {
    CHECK(j["modes"][i - 1]["confidence"] >= j["modes"][i]["confidence"]);
  }
  CHECK(get(explorer(), "/api/motionmap", {{"sample", std::to_string(s.id)}}).body == r.body);
}

TEST_CASE("forecast at a mode cell equals the ranked pipeline forecast") {
  const auto& models = loaded().models;
  int compared = 0;
  for (const auto& s : loaded().data.test) {
    const ForecastResult batch = forecast(models, s.observation, 0);
    for (const auto& f : batch.forecasts) {
      const auto r = get(explorer(), "/api/forecast", cell_query(s.id, f.mode.cell.row, f.mode.cell.col));
      REQUIRE(r.status == 200);
      CHECK(r.body == forecast_json(f));
      ++compared;
    }
  }
  CHECK(compared > 0);
  const auto j = json::parse(get(explorer(), "/api/forecast",
                                 cell_query(loaded().data.test[0].id, 0, 0)).body);
  if (j.contains("frames")) {
    CHECK(j["frames"].size() == static_cast<std::size_t>(testing::tiny_run().data.future_frames));
    CHECK(j["reconstruction"].size() == static_cast<std::size_t>(testing::tiny_run().data.obs_frames));
    CHECK(j["frames"][0].size() == 17 * 3);
  }
}

TEST_CASE("error paths") {
  const int id = loaded().data.test.front().id;
  const int m = loaded().models.settings.heatmap_size;
  CHECK(get(explorer(), "/api/forecast", cell_query(id, m, 0)).status == 400);
  CHECK(get(explorer(), "/api/forecast", cell_query(id, -1, 0)).status == 400);
  CHECK(get(explorer(), "/api/forecast", {{"sample", std::to_string(id)}, {"row", "x"}, {"col", "1"}})
            .status == 400);
  CHECK(get(explorer(), "/api/motionmap").status == 400);
  CHECK(get(explorer(), "/api/motionmap", {{"sample", "999999"}}).status == 404);
  CHECK(get(explorer(), "/nope").status == 404);
  HttpRequest post;
  post.method = "POST";
  post.path = "/healthz";
  CHECK(explorer().handle(post).status == 405);
  const auto err = json::parse(get(explorer(), "/nope").body);
  CHECK(err["code"] == 404);
  CHECK(err["message"].is_string());

  // A codebook populated in one corner only: the far corner has nothing nearby.
  Models sparse = loaded().models;
  Codebook cb(m, sparse.codebook.latent_size());
  cb.insert({0, 0}, sparse.codebook.entries().begin()->second);
  sparse.codebook = cb;
  const Explorer e(sparse, loaded().data.test, 1);
  const auto r = get(e, "/api/forecast", cell_query(id, m - 1, m - 1));
  CHECK(r.status == 422);
  const auto near = json::parse(get(e, "/api/forecast", cell_query(id, 1, 2)).body);
  CHECK(near["used_cell"]["row"] == 0);
  CHECK(near["used_cell"]["col"] == 0);
}

TEST_CASE("action map matches an offline recount") {
  const auto& models = loaded().models;
  const auto j = json::parse(
      get(explorer(), "/api/actionmap", {{"sample", std::to_string(loaded().data.test[0].id)}}).body);
  std::map<HeatmapCell, std::map<std::string, int>> want;
  for (const auto& s : loaded().data.train) {
    ++want[future_cell(models, models.autoencoder.encode_future(s.future))][s.action_label];
  }
  REQUIRE(j["cells"].size() == want.size());
  for (const auto& c : j["cells"]) {
    const HeatmapCell cell{c["row"], c["col"]};
    CHECK(c["label_histogram"].get<std::map<std::string, int>>() == want.at(cell));
    int total = 0;
    for (const auto& [label, n] : want.at(cell)) total += n;
    CHECK(total == models.codebook.entries().at(cell).count);
  }

  Models single = models;
  for (auto& a : single.assignments) a.action_label = "walk";
  const Explorer e(single, loaded().data.test, 1);
  const auto k = json::parse(
      get(e, "/api/actionmap", {{"sample", std::to_string(loaded().data.test[0].id)}}).body);
  for (const auto& c : k["cells"]) CHECK(c["label_histogram"].size() == 1);
}

TEST_CASE("concurrent requests return identical bodies") {
  const int id = loaded().data.test.front().id;
  const auto want = get(explorer(), "/api/motionmap", {{"sample", std::to_string(id)}}).body;
  std::vector<std::future<std::string>> jobs;
  for (int t = 0; t < 4; ++t) {
    jobs.push_back(std::async(std::launch::async, [id] {
      return get(explorer(), "/api/motionmap", {{"sample", std::to_string(id)}}).body;
    }));
  }
  for (auto& j : jobs) CHECK(j.get() == want);
}

TEST_CASE("HTTP server answers on the bound port") {
  std::promise<std::pair<int, std::function<void()>>> ready;
  std::thread server([&] {
    serve(explorer(), "127.0.0.1", 0,
          [&](int port, std::function<void()> stop) { ready.set_value({port, stop}); });
  });
  auto [port, stop] = ready.get_future().get();
  CHECK(port > 0);
  httplib::Client client("127.0.0.1", port);
  const auto res = client.Get("/healthz");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body)["status"] == "ok");
  const auto missing = client.Get("/api/motionmap?sample=999999");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  stop();
  server.join();
}

TEST_CASE("malformed checkpoints are refused") {
  const auto dir = testing::temp_dir("explorer_bad");
  std::ofstream(dir / "bad.mmap") << "not a checkpoint";
  CHECK_THROWS_AS(load_explorer(dir / "bad.mmap", {}), FormatError);
  CHECK_THROWS_AS(load_explorer(dir / "missing.mmap", {}), IoError);
}

}  // TEST_SUITE
