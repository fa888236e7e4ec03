// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "motionmap/autoencoder.hpp"
#include "motionmap/data.hpp"
#include "motionmap/embedding.hpp"
#include "motionmap/motionmap.hpp"
#include "motionmap/pipeline.hpp"

namespace motionmap {

struct DataSection {
  int obs_frames = 25;
  int future_frames = 100;
  int stride = 13;
  double tau = 0.5;
  double test_fraction = 0.2;
};

struct AutoencoderSection {
  int latent = 128;
  int uncertainty_hidden = 128;
  int epochs = 100;
  int unit_variance_epochs = 0;
  int batch_size = 16;
  double step_size = 1e-3;
  double clip_norm = 5.0;
  int finetune_epochs = 20;
  double finetune_step_scale = 0.1;
};

struct MotionMapSection {
  MotionMapSettings settings;
  int hidden = 128;
  int conv_channels = 8;
  int conv_layers = 3;
  int epochs = 60;
  int batch_size = 16;
  double step_size = 1e-3;
  double clip_norm = 5.0;
};

struct EvaluationSection {
  int budget = 7;
  Protocol protocol = Protocol::kTrainMined;
};

struct PathsSection {
  std::string out = "runs/default";
};

struct ServeSection {
  std::string host = "127.0.0.1";
  int port = 8080;
};

struct RunConfig {
  std::uint64_t seed = 1;
  GeneratorConfig generator;
  DataSection data;
  AutoencoderSection autoencoder;
  EmbeddingHyper embedding;  // its seed is derived from `seed`
  MotionMapSection motionmap;
  EvaluationSection evaluation;
  PathsSection paths;
  ServeSection serve;

  void validate() const;

  AutoencoderDims autoencoder_dims() const;
  HeatmapModelDims heatmap_dims() const;
  // Hash of every setting that influences results (paths and serve excluded).
  std::uint64_t spec_hash() const;

  std::filesystem::path out_dir() const { return paths.out; }
  std::filesystem::path corpus_path() const { return out_dir() / "corpus.mmcorpus"; }
  std::filesystem::path sidecar_path() const { return out_dir() / "corpus.mmgt"; }
  std::filesystem::path checkpoint_path() const { return out_dir() / "model.mmap"; }
};

// Stream ids for seeds derived from RunConfig::seed.
enum class SeedStream : std::uint64_t {
  kGenerator = 1,
  kSplit,
  kAutoencoderInit,
  kAutoencoderTrain,
  kEmbedding,
  kHeatmapInit,
  kHeatmapTrain,
  kFinetune,
};
std::uint64_t stage_seed(const RunConfig& config, SeedStream stream);

// JSON with the same nesting as RunConfig. Missing keys keep their defaults;
// unknown keys and mistyped values are ConfigErrors.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const RunConfig& config);

// "section.key=value" (value parsed as JSON, else taken as a string). Keys
// and types are checked; call validate() once all overrides are applied.
void apply_override(RunConfig& config, const std::string& assignment);

// Writes config.resolved.json into `dir`, creating it if needed.
void echo_config(const RunConfig& config, const std::filesystem::path& dir);

}  // namespace motionmap
