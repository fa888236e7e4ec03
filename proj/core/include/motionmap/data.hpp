// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "motionmap/kinematics.hpp"

namespace motionmap {

struct CorpusSequence {
  PoseSequence motion;
  std::string action_label;
  double actor_scale = 1.0;
};

struct MotionCorpus {
  SkeletonTopology topology;
  std::vector<CorpusSequence> sequences;

  bool operator==(const MotionCorpus& other) const;
};

// An observation/future window. Both halves are pelvis-centered.
struct Sample {
  int id = 0;
  PoseSequence observation;  // T_o frames
  PoseSequence future;       // T_f frames
  std::string action_label;
  int source_sequence = 0;
};

// Parameters of the procedural motion generator. Every sequence consists of
// a shared "prefix" posture (the observation) followed by one family-specific
// motion; families that start from the same prefix posture make the
// observation ambiguous and hence the future multimodal.
struct GeneratorConfig {
  int joints = 17;
  double fps = 25.0;
  int families = 5;
  int sequences_per_family = 40;
  int prefix_frames = 25;
  int motion_frames = 100;
  double actor_scale_min = 0.85;
  double actor_scale_max = 1.15;
  double proportion_jitter = 0.05;  // per-bone relative length jitter
  double speed_jitter = 0.15;       // relative jitter of motion tempo
  double amplitude_jitter = 0.1;    // relative jitter of motion amplitude
  double noise = 0.003;             // meters, i.i.d. per coordinate
  // Strength of a family-specific preparatory shift of the posture over the
  // last preparation_frames of the prefix, scaled per sequence by U(0, 1).
  // Late observation frames then carry a partial hint of the upcoming family.
  double preparation = 2.0;
  int preparation_frames = 10;

  void validate() const;
};

// Catalog order of the motion families; the first `families` entries are used.
const std::vector<std::string>& motion_family_names();
// Name of the prefix posture the family starts from.
std::string motion_family_prefix(const std::string& family);

// Deterministic given (config, seed). Coordinates are quantized to 1e-6 m so
// a corpus survives the text format exactly.
MotionCorpus generate_synthetic_corpus(const GeneratorConfig& config, std::uint64_t seed);

// Sliding windows of obs_frames + future_frames at the given stride, each
// split into (observation, future) and zero-centered. Sample ids are
// assigned consecutively in (sequence, offset) order.
std::vector<Sample> window_corpus(const MotionCorpus& corpus, int obs_frames, int future_frames,
                                  int stride);

// Number of windows a sequence of `length` frames yields.
int window_count(int length, int obs_frames, int future_frames, int stride);

// For each sample (by position), the sorted ids of samples whose futures
// serve as its multimodal ground truths. Always contains the sample itself.
struct MultimodalGTIndex {
  double tau = 0.5;
  std::vector<int> sample_ids;             // query ids, aligned with members
  std::vector<std::vector<int>> members;   // ids of matching samples

  const std::vector<int>& members_of(int sample_id) const;
  std::size_t size() const { return members.size(); }
  bool operator==(const MultimodalGTIndex& other) const = default;
};

// Mean over the last three frames and all joints of the per-joint distance
// between a's observation and b's observation re-expressed on a's skeleton
// (link lengths of a's last observed frame).
double observation_distance(const Sample& a, const Sample& b, const SkeletonTopology& topo);

inline constexpr int kMiningFrames = 3;

MultimodalGTIndex mine_multimodal_gt(const std::vector<Sample>& samples,
                                     const SkeletonTopology& topo, double tau);

// Queries matched against a separate candidate pool (e.g. held-out samples
// against the training split). The query itself is not added: the members
// are pool ids only.
MultimodalGTIndex mine_against_pool(const std::vector<Sample>& queries,
                                    const std::vector<Sample>& pool,
                                    const SkeletonTopology& topo, double tau);

// Text corpus format (.mmcorpus).
inline constexpr const char* kCorpusMagic = "MMCORPUS";
inline constexpr int kCorpusVersion = 1;

void save_corpus(const MotionCorpus& corpus, const std::filesystem::path& path);
MotionCorpus load_corpus(const std::filesystem::path& path);
void write_corpus(const MotionCorpus& corpus, std::ostream& os);
MotionCorpus read_corpus(std::istream& is);

// Mining index sidecar (.mmgt): windowing parameters, split and indices.
struct MiningSidecar {
  int obs_frames = 0;
  int future_frames = 0;
  int stride = 0;
  double tau = 0.0;
  std::vector<int> test_ids;
  MultimodalGTIndex train;       // train -> train (self included)
  MultimodalGTIndex test_train;  // test -> train pool
  MultimodalGTIndex test_test;   // test -> test (self included)

  bool operator==(const MiningSidecar& other) const = default;
};

void save_sidecar(const MiningSidecar& sidecar, const std::filesystem::path& path);
MiningSidecar load_sidecar(const std::filesystem::path& path);

// Deterministic train/test split over source sequences, stratified by
// action label. Returns sorted sequence indices.
std::vector<int> choose_test_sequences(const MotionCorpus& corpus, double test_fraction,
                                       std::uint64_t seed);

}  // namespace motionmap
