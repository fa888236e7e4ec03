// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionmap/export.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "motionmap/error.hpp"
#include "motionmap/workflow.hpp"

namespace motionmap {

namespace fs = std::filesystem;

std::string manifest_tsv(const FigureManifest& manifest) {
  std::string out = "export\tanalogue\tcommand\n";
  for (const auto& e : manifest.entries) out += e.name + '\t' + e.analogue + '\t' + e.command + '\n';
  return out;
}

FigureManifest parse_manifest(const std::string& text) {
  FigureManifest m;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "export\tanalogue\tcommand") {
    throw FormatError("manifest: missing header");
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto a = line.find('\t');
    const auto b = a == std::string::npos ? a : line.find('\t', a + 1);
    if (b == std::string::npos) {
      throw FormatError("manifest line " + std::to_string(lineno) + ": expected 3 fields");
    }
    m.entries.push_back({line.substr(0, a), line.substr(a + 1, b - a - 1), line.substr(b + 1)});
  }
  return m;
}

FigureManifest load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

std::vector<std::string> check_manifest(const FigureManifest& manifest, const fs::path& dir) {
  std::vector<std::string> problems;
  std::map<std::string, int> listed;
  for (const auto& e : manifest.entries) ++listed[e.name];
  std::set<std::string> present;
  if (fs::is_directory(dir)) {
    for (const auto& f : fs::directory_iterator(dir)) {
      const std::string name = f.path().filename().string();
      if (name != kManifestFile) present.insert(name);
    }
  }
  for (const auto& [name, count] : listed) {
    if (count > 1) problems.push_back("duplicate: " + name);
    if (!present.count(name)) problems.push_back("missing: " + name);
  }
  for (const auto& name : present) {
    if (!listed.count(name)) problems.push_back("unexpected: " + name);
  }
  return problems;
}

std::string to_string(ExportKind k) {
  switch (k) {
    case ExportKind::kDensity: return "density";
    case ExportKind::kOverlays: return "overlays";
    case ExportKind::kForecasts: return "forecasts";
  }
  return "?";
}

std::vector<ExportKind> parse_export_kinds(const std::string& what) {
  const std::vector<ExportKind> all{ExportKind::kDensity, ExportKind::kOverlays,
                                    ExportKind::kForecasts};
  if (what == "all") return all;
  std::vector<ExportKind> out;
  std::istringstream in(what);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto it = std::find_if(all.begin(), all.end(),
                                 [&](ExportKind k) { return to_string(k) == item; });
    if (it == all.end()) {
      throw ConfigError("unknown export '" + item + "' (expected all, density, overlays, forecasts)");
    }
    if (std::find(out.begin(), out.end(), *it) == out.end()) out.push_back(*it);
  }
  if (out.empty()) throw ConfigError("no export selected");
  return out;
}

fs::path export_dir(const RunConfig& config) { return config.out_dir() / "exports"; }

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

std::string forecasts_tsv(const ForecastResult& result) {
  std::string out =
      "rank\texpanded\tconfidence\trow\tcol\tused_row\tused_col\tframe\tjoint\tx\ty\tz\tvariance\n";
  char buf[256];
  for (const auto& f : result.forecasts) {
    const int t_o = static_cast<int>(f.uncertainty.rows()) - f.forecast.frame_count();
    for (int t = 0; t < f.forecast.frame_count(); ++t) {
      const auto& pose = f.forecast.frames[t];
      for (int j = 0; j < pose.rows(); ++j) {
        std::snprintf(buf, sizeof buf, "%d\t%d\t%.6f\t%d\t%d\t%d\t%d\t%d\t%d\t%.6f\t%.6f\t%.6f\t%.6g\n",
                      f.rank, f.expanded ? 1 : 0, f.mode.confidence, f.mode.cell.row,
                      f.mode.cell.col, f.used_cell.row, f.used_cell.col, t, j, pose(j, 0),
                      pose(j, 1), pose(j, 2), f.uncertainty(t_o + t, j));
        out += buf;
      }
    }
  }
  return out;
}

}  // namespace

FigureManifest run_export(const RunConfig& config, const std::vector<ExportKind>& kinds,
                          int sample_count) {
  if (sample_count < 0) throw ConfigError("export sample count must be >= 0");
  const Dataset data = load_dataset(config);
  std::uint64_t hash = 0;
  const Models models = load_models(config.checkpoint_path(), &hash);
  if (hash != config.spec_hash()) {
    throw ConfigError("checkpoint " + config.checkpoint_path().string() +
                      " was produced by a different configuration");
  }
  const fs::path dir = export_dir(config);
  fs::create_directories(dir);
  const fs::path manifest_path = dir / kManifestFile;
  std::map<std::string, ManifestEntry> entries;
  if (fs::exists(manifest_path)) {
    for (auto& e : load_manifest(manifest_path).entries) entries[e.name] = e;
  }
  const std::string base = "motionmap export --config <config> --what ";

  std::vector<Sample> chosen = data.test;
  std::sort(chosen.begin(), chosen.end(), [](const Sample& a, const Sample& b) { return a.id < b.id; });
  if (static_cast<int>(chosen.size()) > sample_count) chosen.resize(sample_count);

  for (const ExportKind kind : kinds) {
    const std::string command = base + to_string(kind);
    if (kind == ExportKind::kDensity) {
      const auto& emb = models.embedding;
      Eigen::MatrixXd points(emb.size() + static_cast<Eigen::Index>(data.test.size()), 2);
      points.topRows(emb.size()) = emb.scaled_points();
      std::vector<std::string> groups(emb.size(), "train");
      for (std::size_t i = 0; i < data.test.size(); ++i) {
        const LatentVector z = models.autoencoder.encode_future(data.test[i].future);
        points.row(emb.size() + static_cast<Eigen::Index>(i)) = transform_new(emb, z).transpose();
        groups.push_back("test");
      }
      write_file(dir / "density.tsv", density_tsv(export_density(points, groups)));
      entries["density.tsv"] = {"density.tsv", "latent density map, train vs test futures", command};
      continue;
    }
    for (const auto& s : chosen) {
      const std::string id = std::to_string(s.id);
      const ForecastResult result = forecast(models, s.observation, config.evaluation.budget);
      if (kind == ExportKind::kOverlays) {
        std::vector<HeatmapCell> marks;
        for (const auto& m : result.maxima) marks.push_back(m.cell);
        const std::string pgm = "heatmap_s" + id + ".pgm";
        const std::string tsv = "heatmap_s" + id + ".tsv";
        write_file(dir / pgm, heatmap_pgm(result.heatmap, marks));
        write_file(dir / tsv, heatmap_tsv(result.heatmap));
        entries[pgm] = {pgm, "predicted heatmap overlay with modes (image)", command};
        entries[tsv] = {tsv, "predicted heatmap overlay with modes (values)", command};
      } else {
        const std::string name = "forecasts_s" + id + ".tsv";
        write_file(dir / name, forecasts_tsv(result));
        entries[name] = {name, "confidence-ranked multimodal forecasts", command};
      }
    }
  }
  FigureManifest manifest;
  for (auto& [name, e] : entries) manifest.entries.push_back(std::move(e));
  write_file(manifest_path, manifest_tsv(manifest));
  return manifest;
}

}  // namespace motionmap
