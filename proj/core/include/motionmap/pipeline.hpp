// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "motionmap/autoencoder.hpp"
#include "motionmap/data.hpp"
#include "motionmap/embedding.hpp"
#include "motionmap/motionmap.hpp"

namespace motionmap {

struct MotionMapSettings {
  int heatmap_size = 64;
  double margin = 1.0;
  double sigma = 1.5;
  double positive_weight = 25.0;
  double threshold = 0.2;
  int nms_radius = 3;
  int max_modes = 0;  // 0: unbounded
  double lookup_radius = Codebook::kDefaultRadius;

  bool operator==(const MotionMapSettings& other) const = default;
};

// Heatmap cell assigned to one training future.
struct CellAssignment {
  int sample_id = 0;
  HeatmapCell cell;
  std::string action_label;

  bool operator==(const CellAssignment& other) const = default;
};

// Everything inference needs.
struct Models {
  SkeletonTopology topology;
  AutoencoderModel autoencoder;
  Embedding2D embedding;  // scaled to the heatmap
  Codebook codebook;
  HeatmapModel heatmap;
  MotionMapSettings settings;
  std::vector<CellAssignment> assignments;  // training futures, by sample id
};

// The heatmap cell of a future latent: out-of-sample placement, then
// quantization. Training futures are assigned with the same function, so
// their own cells are always populated.
HeatmapCell future_cell(const Models& models, const LatentVector& zy);
HeatmapCell future_cell(const Embedding2D& emb, const LatentVector& zy);

struct RankedForecast {
  int rank = 0;  // from 1
  Mode mode;
  HeatmapCell used_cell;  // populated codebook cell actually decoded
  bool expanded = false;  // added to fill the budget, not a local maximum
  PoseSequence forecast;        // T_f frames
  PoseSequence reconstruction;  // T_o frames
  Eigen::MatrixXd uncertainty;  // (T_o + T_f) x J variances
};

struct ForecastResult {
  Heatmap heatmap;
  std::vector<Mode> maxima;  // every extracted local maximum
  std::vector<RankedForecast> forecasts;
  bool no_confident_future() const { return forecasts.empty(); }
};

// Decode the future at a heatmap cell (codebook lookup with fallback).
RankedForecast decode_at(const Models& models, const LatentVector& zx, const HeatmapCell& cell);

// Predict the MotionMap of X, extract its maxima and decode one forecast per
// mode in confidence order. With budget > 0 exactly min(budget, populated
// cells) forecasts are returned: surplus modes are dropped, missing ones are
// filled from populated codebook cells by descending heatmap value, first
// outside the suppression radius of every selected cell and then anywhere.
// budget <= 0 keeps every mode.
ForecastResult forecast(const Models& models, const PoseSequence& observation, int budget);

PoseSequence zero_velocity(const PoseSequence& observation, int future_frames);

// Mean over frames of the whole-pose Euclidean distance (all J x 3
// coordinates of a frame together).
double sequence_distance(const PoseSequence& a, const PoseSequence& b);
double final_frame_distance(const PoseSequence& a, const PoseSequence& b);

double ade(const std::vector<PoseSequence>& preds, const PoseSequence& gt);
double fde(const std::vector<PoseSequence>& preds, const PoseSequence& gt);
// Mean over ground truths of ade / fde. Ground truths are compared as given;
// `transfer_ground_truths` re-expresses them on a query skeleton first.
double mmade(const std::vector<PoseSequence>& preds, const std::vector<PoseSequence>& gts);
double mmfde(const std::vector<PoseSequence>& preds, const std::vector<PoseSequence>& gts);
std::vector<PoseSequence> transfer_ground_truths(const std::vector<PoseSequence>& gts,
                                                 const PoseSequence& observation,
                                                 const SkeletonTopology& topo);
// Mean over unordered pairs of the L2 distance between flattened sequences.
// Empty for fewer than two predictions.
std::optional<double> diversity(const std::vector<PoseSequence>& preds);

enum class Protocol { kTrainMined, kTestMined };
std::string to_string(Protocol p);
Protocol parse_protocol(const std::string& s);

struct MethodMetrics {
  std::string method;
  int budget = 0;
  int samples = 0;
  std::optional<double> diversity;
  double ade = 0.0;
  double fde = 0.0;
  double mmade = 0.0;
  double mmfde = 0.0;

  bool operator==(const MethodMetrics& other) const = default;
};

struct MetricsReport {
  Protocol protocol = Protocol::kTrainMined;
  int budget = 0;
  int sample_count = 0;
  std::vector<MethodMetrics> methods;  // motionmap, zero_velocity
  // Mode recall: ground-truth mode cells (local maxima of the heatmap stamped
  // from the sample's ground-truth futures) that have a predicted mode within
  // Chebyshev distance recall_radius.
  int recall_radius = 3;
  int gt_modes = 0;
  int recalled_modes = 0;
  double mode_recall() const { return gt_modes ? static_cast<double>(recalled_modes) / gt_modes : 0.0; }
  // Rank sanity over samples with at least two forecasts: mean ADE of the
  // rank-1 and the last-ranked forecast to the sample's own future.
  int ranked_samples = 0;
  double rank_first_ade = 0.0;
  double rank_last_ade = 0.0;
  // Number of samples by count of extracted maxima.
  std::map<int, int> maxima_histogram;

  const MethodMetrics& method(const std::string& name) const;
  bool operator==(const MetricsReport& other) const = default;
};

// Ground truths per test sample: the futures of `gt_index` members looked up
// in `pool` (training split or test split depending on the protocol). The
// sample's own future is always included.
MetricsReport evaluate(const Models& models, const std::vector<Sample>& test_samples,
                       const MultimodalGTIndex& gt_index, const std::vector<Sample>& pool,
                       Protocol protocol, int budget);

std::string metrics_table(const MetricsReport& report);
std::string metrics_jsonl(const MetricsReport& report);

}  // namespace motionmap
