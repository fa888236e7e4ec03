// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "motionmap/embedding.hpp"
#include "motionmap/kinematics.hpp"
#include "motionmap/nn/optim.hpp"
#include "motionmap/nn/params.hpp"
#include "motionmap/nn/tape.hpp"

namespace motionmap {

// m x m grid of values in [0, 1]; values(row, col).
struct Heatmap {
  Eigen::MatrixXd values;

  Heatmap() = default;
  explicit Heatmap(int m, double fill = 0.0) : values(Eigen::MatrixXd::Constant(m, m, fill)) {}
  explicit Heatmap(Eigen::MatrixXd v);

  int size() const { return static_cast<int>(values.rows()); }
  double at(const HeatmapCell& c) const { return values(c.row, c.col); }
  bool contains(const HeatmapCell& c) const {
    return c.row >= 0 && c.col >= 0 && c.row < size() && c.col < size();
  }
  // Row-major flattening, index row * m + col.
  Eigen::VectorXd flat() const;
  static Heatmap from_flat(const Eigen::VectorXd& flat, int m);
  bool operator==(const Heatmap& other) const { return values == other.values; }
};

// Unnormalized Gaussian bumps of peak 1 at each distinct cell, combined by
// elementwise maximum.
Heatmap stamp_heatmap(const std::vector<HeatmapCell>& cells, double sigma, int m);

struct Mode {
  HeatmapCell cell;
  double confidence = 0.0;

  bool operator==(const Mode& other) const = default;
};

// Cells >= all 8 neighbours and >= threshold, accepted greedily by value
// (ties row-major) while suppressing candidates within Chebyshev distance
// nms_radius of an accepted mode. max_k <= 0 means unbounded.
std::vector<Mode> extract_maxima(const Heatmap& hm, double threshold, int nms_radius,
                                 int max_k = 0);

// Mean over cells of -[w t log p + (1 - t) log(1 - p)], p clamped to
// [1e-7, 1 - 1e-7].
double weighted_bce(const Heatmap& pred, const Heatmap& target, double positive_weight);

struct CodebookEntry {
  LatentVector mean;
  int count = 0;

  bool operator==(const CodebookEntry& other) const = default;
};

struct LookupResult {
  HeatmapCell used_cell;
  const LatentVector* latent = nullptr;
  bool exact = false;
  double distance = 0.0;
};

class Codebook {
 public:
  static constexpr double kDefaultRadius = 5.0;

  Codebook() = default;
  Codebook(int m, int n) : m_(m), n_(n) {}

  int heatmap_size() const { return m_; }
  int latent_size() const { return n_; }
  const std::map<HeatmapCell, CodebookEntry>& entries() const { return entries_; }
  std::size_t populated() const { return entries_.size(); }
  bool contains(const HeatmapCell& c) const { return entries_.count(c) > 0; }

  // Exact hit or the nearest populated cell by Euclidean cell distance within
  // `radius`, ties to the row-major first. Throws LookupError beyond it.
  LookupResult find(const HeatmapCell& cell, double radius = kDefaultRadius) const;
  const LatentVector& lookup(const HeatmapCell& cell, double radius = kDefaultRadius) const {
    return *find(cell, radius).latent;
  }

  // Dense-table size estimate with 32-bit entries: 32 * m^2 * n bits.
  std::uint64_t dense_size_bits() const { return dense_size_bits(m_, n_); }
  static std::uint64_t dense_size_bits(std::uint64_t m, std::uint64_t n) { return 32 * m * m * n; }
  // The same estimate in units of 2^20 bits.
  double dense_size_mebibits() const { return static_cast<double>(dense_size_bits()) / 1048576.0; }

  void insert(const HeatmapCell& cell, CodebookEntry entry);
  bool operator==(const Codebook& other) const = default;

 private:
  int m_ = 0;
  int n_ = 0;
  std::map<HeatmapCell, CodebookEntry> entries_;
};

// Groups latents by cell; each mean is the left-to-right sum divided by the
// count.
Codebook build_codebook(const std::vector<std::pair<HeatmapCell, LatentVector>>& pairs, int m,
                        int n);

struct HeatmapModelDims {
  int joints = 17;
  int frames = 3;  // trailing observation frames consumed
  int hidden = 128;
  int heatmap_size = 64;
  int conv_channels = 8;
  int conv_layers = 3;  // 1x1 convolutions, the last one to a single channel

  bool operator==(const HeatmapModelDims& other) const = default;
};

// GRU over the last observation frames, a dense layer to m^2 values read as
// a one-channel grid, 1x1 convolutions with ELU between them and a sigmoid.
// Parameter names start with "h.".
class HeatmapModel {
 public:
  HeatmapModel() = default;
  HeatmapModel(const HeatmapModelDims& dims, std::uint64_t seed);
  HeatmapModel(const HeatmapModelDims& dims, nn::ParameterStore params);

  const HeatmapModelDims& dims() const { return dims_; }
  const nn::ParameterStore& params() const { return params_; }
  nn::ParameterStore& params() { return params_; }

  // Uses only the last dims().frames frames of the observation.
  Heatmap predict(const PoseSequence& observation) const;
  // (m^2 x B) probabilities, rows in row-major cell order.
  nn::Var forward(nn::Tape& tape, const std::vector<const PoseSequence*>& observations) const;

  bool operator==(const HeatmapModel& other) const {
    return dims_ == other.dims_ && params_ == other.params_;
  }

 private:
  HeatmapModelDims dims_;
  nn::ParameterStore params_;
};

struct HeatmapTrainOptions {
  int epochs = 60;
  int batch_size = 16;
  double positive_weight = 25.0;
  nn::AdamHyper adam{1e-3, 0.9, 0.999, 1e-8, 5.0};
  std::uint64_t seed = 0;
  std::function<void(int, double)> on_epoch;
};

struct HeatmapTrainReport {
  std::vector<double> loss_curve;
};

HeatmapTrainReport train_heatmap_model(HeatmapModel& model,
                                       const std::vector<PoseSequence>& observations,
                                       const std::vector<Heatmap>& targets,
                                       const HeatmapTrainOptions& options,
                                       nn::AdamState* state = nullptr);

// Binary 8-bit portable grey map (P5), values scaled to [0, 255]; rows are
// heatmap rows. `marks` are drawn at full intensity.
std::string heatmap_pgm(const Heatmap& hm, const std::vector<HeatmapCell>& marks = {});
// Tab-separated row, col, value lines with a header.
std::string heatmap_tsv(const Heatmap& hm);

}  // namespace motionmap
