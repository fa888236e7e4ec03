// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "motionmap/error.hpp"
#include "motionmap/export.hpp"
#include "motionmap/workflow.hpp"

using namespace motionmap;
namespace fs = std::filesystem;

namespace {

int line_count(const fs::path& p) {
  std::ifstream in(p);
  int n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

RunConfig exported_run(const std::string& name) {
  const RunConfig& base = testing::tiny_run();
  RunConfig cfg = base;
  cfg.paths.out = testing::temp_dir(name).string();
  for (const auto& f : {base.corpus_path(), base.sidecar_path(), base.checkpoint_path()}) {
    fs::copy_file(f, fs::path(cfg.paths.out) / f.filename());
  }
  return cfg;
}

}  // namespace

TEST_SUITE("export") {

TEST_CASE("a fresh export matches its manifest") {
  const RunConfig cfg = exported_run("export_full");
  const FigureManifest m = run_export(cfg, parse_export_kinds("all"), 2);
  CHECK(check_manifest(m, export_dir(cfg)).empty());
  CHECK(m.entries.size() == 1 + 2 * 3);
  CHECK(load_manifest(export_dir(cfg) / kManifestFile).entries == m.entries);
  for (const auto& e : m.entries) {
    CHECK_FALSE(e.analogue.empty());
    CHECK(e.command.find("motionmap export") == 0);
  }

  const Dataset data = load_dataset(cfg);
  CHECK(line_count(export_dir(cfg) / "density.tsv") ==
        1 + static_cast<int>(data.train.size() + data.test.size()));

  std::ifstream pgm(export_dir(cfg) / ("heatmap_s" + std::to_string(data.test[0].id) + ".pgm"),
                    std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  pgm >> magic >> w >> h >> maxval;
  pgm.get();
  CHECK(magic == "P5");
  CHECK(w == cfg.motionmap.settings.heatmap_size);
  CHECK(maxval == 255);
  std::string pixels((std::istreambuf_iterator<char>(pgm)), std::istreambuf_iterator<char>());
  CHECK(pixels.size() == static_cast<std::size_t>(w * h));
}

TEST_CASE("manifest mismatches are named") {
  const RunConfig cfg = exported_run("export_mismatch");
  const FigureManifest m = run_export(cfg, parse_export_kinds("density,overlays"), 1);
  const fs::path dir = export_dir(cfg);
  fs::remove(dir / "density.tsv");
  std::ofstream(dir / "stray.txt") << "x";
  const auto problems = check_manifest(m, dir);
  CHECK(problems == std::vector<std::string>{"missing: density.tsv", "unexpected: stray.txt"});

  FigureManifest dup = m;
  dup.entries.push_back(dup.entries.back());
  fs::remove(dir / "stray.txt");
  run_export(cfg, parse_export_kinds("density"), 1);
  CHECK(check_manifest(dup, dir) == std::vector<std::string>{"duplicate: " + dup.entries.back().name});
}

TEST_CASE("partial exports merge into the manifest") {
  const RunConfig cfg = exported_run("export_merge");
  run_export(cfg, parse_export_kinds("density"), 1);
  const FigureManifest m = run_export(cfg, parse_export_kinds("forecasts"), 1);
  CHECK(m.entries.size() == 2);
  CHECK(check_manifest(m, export_dir(cfg)).empty());
}

TEST_CASE("manifest text format and selection parsing") {
  FigureManifest m;
  m.entries.push_back({"a.tsv", "thing", "cmd x"});
  CHECK(parse_manifest(manifest_tsv(m)).entries == m.entries);
  CHECK_THROWS_AS(parse_manifest("bad header\n"), FormatError);
  CHECK_THROWS_AS(parse_manifest("export\tanalogue\tcommand\nonly-one-field\n"), FormatError);
  CHECK(parse_export_kinds("overlays,density,overlays").size() == 2);
  CHECK_THROWS_AS(parse_export_kinds("pictures"), ConfigError);
  CHECK_THROWS_AS(parse_export_kinds(""), ConfigError);
}

}  // TEST_SUITE
