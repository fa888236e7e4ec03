// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "motionmap/config.hpp"

namespace motionmap {

// One exported artifact: file name relative to the export directory, the
// figure it stands in for and the command that regenerates it.
struct ManifestEntry {
  std::string name;
  std::string analogue;
  std::string command;

  bool operator==(const ManifestEntry&) const = default;
};

struct FigureManifest {
  std::vector<ManifestEntry> entries;  // sorted by name
};

inline constexpr const char* kManifestFile = "MANIFEST.tsv";

// Tab-separated, header "export\tanalogue\tcommand".
std::string manifest_tsv(const FigureManifest& manifest);
FigureManifest parse_manifest(const std::string& text);
FigureManifest load_manifest(const std::filesystem::path& path);

// Mismatches between the manifest and the files in `export_dir` (the
// manifest file itself excluded), one line each:
// "missing: NAME", "unexpected: NAME" or "duplicate: NAME". Empty when they
// correspond one to one.
std::vector<std::string> check_manifest(const FigureManifest& manifest,
                                        const std::filesystem::path& export_dir);

enum class ExportKind { kDensity, kOverlays, kForecasts };
std::vector<ExportKind> parse_export_kinds(const std::string& what);  // "all" or comma list
std::string to_string(ExportKind k);

// Writes the selected exports under <out>/exports and merges their entries
// into the manifest there. Overlays and forecast dumps cover the first
// `sample_count` held-out samples by id.
//
//   density.tsv          train and test future latents on the map
//   heatmap_s<ID>.pgm    predicted MotionMap, modes marked white
//   heatmap_s<ID>.tsv    same values as text
//   forecasts_s<ID>.tsv  ranked forecasts with per-joint variance
FigureManifest run_export(const RunConfig& config, const std::vector<ExportKind>& kinds,
                          int sample_count);

std::filesystem::path export_dir(const RunConfig& config);

}  // namespace motionmap
