// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "fixtures.hpp"
#include "motionmap/config.hpp"
#include "motionmap/error.hpp"

using namespace motionmap;

TEST_SUITE("config") {

TEST_CASE("defaults serialize and parse back unchanged") {
  const RunConfig d;
  const std::string text = config_to_json(d);
  CHECK(config_to_json(parse_config(text)) == text);
  CHECK(parse_config("{}").spec_hash() == d.spec_hash());
  CHECK(d.evaluation.budget == 7);
  CHECK(d.data.tau == 0.5);
}

TEST_CASE("partial files merge over defaults") {
  const RunConfig c = parse_config(R"({"seed": 9, "data": {"tau": 0.2}})");
  CHECK(c.seed == 9);
  CHECK(c.data.tau == 0.2);
  CHECK(c.data.stride == RunConfig{}.data.stride);
}

TEST_CASE("unknown keys, type mismatches and bad values are errors") {
  CHECK_THROWS_AS(parse_config(R"({"sede": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"data": {"tua": 0.2}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"data": {"tau": "high"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"data": 3})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"data": {"stride": 1.5}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"data": {"tau": -1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"evaluation": {"protocol": "both"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), IoError);
}

TEST_CASE("overrides use dotted paths and JSON values") {
  RunConfig c;
  apply_override(c, "data.tau=0.25");
  apply_override(c, "evaluation.protocol=test-mined");
  apply_override(c, "motionmap.heatmap_size=32");
  apply_override(c, "paths.out=\"x/y\"");
  CHECK(c.data.tau == 0.25);
  CHECK(c.evaluation.protocol == Protocol::kTestMined);
  CHECK(c.motionmap.settings.heatmap_size == 32);
  CHECK(c.paths.out == "x/y");
  CHECK_THROWS_AS(apply_override(c, "data.nope=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "data.tau"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "data.stride=fast"), ConfigError);
}

TEST_CASE("the hash tracks results-relevant settings only") {
  RunConfig a, b;
  b.paths.out = "elsewhere";
  b.serve.port = 1;
  b.evaluation.budget = 3;
  CHECK(a.spec_hash() == b.spec_hash());
  b.data.tau = 0.4;
  CHECK(a.spec_hash() != b.spec_hash());
  RunConfig c;
  c.seed = 2;
  CHECK(a.spec_hash() != c.spec_hash());
}

TEST_CASE("stage seeds are distinct and reproducible") {
  RunConfig c;
  CHECK(stage_seed(c, SeedStream::kGenerator) == stage_seed(c, SeedStream::kGenerator));
  CHECK(stage_seed(c, SeedStream::kGenerator) != stage_seed(c, SeedStream::kSplit));
  RunConfig d;
  d.seed = 2;
  CHECK(stage_seed(c, SeedStream::kEmbedding) != stage_seed(d, SeedStream::kEmbedding));
}

TEST_CASE("resolved config is echoed") {
  const auto dir = testing::temp_dir("config_echo");
  RunConfig c;
  c.seed = 5;
  echo_config(c, dir);
  CHECK(load_config(dir / "config.resolved.json").seed == 5);
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"default.json", "synthetic_e2e.json"}) {
    const auto path = std::filesystem::path(MOTIONMAP_SOURCE_DIR) / "configs" / name;
    CHECK_NOTHROW(load_config(path));
  }
}

}  // TEST_SUITE
