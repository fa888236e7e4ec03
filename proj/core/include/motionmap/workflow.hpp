// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "motionmap/config.hpp"
#include "motionmap/data.hpp"
#include "motionmap/nn/container.hpp"
#include "motionmap/pipeline.hpp"

namespace motionmap {

// Windowed, split and mined corpus.
struct Dataset {
  MotionCorpus corpus;
  std::vector<Sample> train;
  std::vector<Sample> test;
  MiningSidecar mining;

  const MultimodalGTIndex& test_index(Protocol p) const {
    return p == Protocol::kTrainMined ? mining.test_train : mining.test_test;
  }
  const std::vector<Sample>& test_pool(Protocol p) const {
    return p == Protocol::kTrainMined ? train : test;
  }
};

// Windows the corpus, splits source sequences and mines all three indices.
Dataset prepare_dataset(const RunConfig& config, MotionCorpus corpus);
// Rebuilds the dataset from a saved corpus and mining sidecar.
Dataset load_dataset(const RunConfig& config);

// Generates the corpus, writes it and its mining sidecar under the output
// directory and echoes the config.
Dataset run_generate(const RunConfig& config);

enum class Stage { kNone = 0, kAutoencoder, kEmbedding, kCodebook, kHeatmap, kFinetune };
const std::vector<Stage>& training_stages();
std::string to_string(Stage s);
Stage parse_stage(const std::string& s);

struct TrainingState {
  Stage completed = Stage::kNone;
  std::vector<std::string> stage_log;  // completed stages in execution order
  Models models;
  std::vector<double> autoencoder_loss;
  std::vector<double> heatmap_loss;
  std::vector<double> finetune_loss;
  double decode_loss_before = 0.0;  // codebook-mean latents, before fine-tuning
  double decode_loss_after = 0.0;
};

nn::Container to_container(const TrainingState& state, std::uint64_t spec_hash);
TrainingState from_container(const nn::Container& container);
// Loads a checkpoint and checks that it holds a fully trained model.
Models load_models(const std::filesystem::path& path, std::uint64_t* spec_hash = nullptr);

// One progress record: stage, epoch (from 1) and loss.
using ProgressFn = std::function<void(const std::string& stage, int epoch, double loss)>;

// Runs every stage after `state.completed` in order, saving a checkpoint to
// `checkpoint` (if non-empty) after each one.
TrainingState run_training(const RunConfig& config, const Dataset& data, TrainingState state,
                           const std::filesystem::path& checkpoint, const ProgressFn& progress);

// Resume when `resume` and a checkpoint with a matching configuration hash exists.
TrainingState run_train(const RunConfig& config, bool resume, const ProgressFn& progress);

struct EvaluationOutput {
  MetricsReport report;
  std::filesystem::path table;
  std::filesystem::path jsonl;
};
EvaluationOutput run_evaluate(const RunConfig& config);

}  // namespace motionmap
