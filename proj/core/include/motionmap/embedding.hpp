// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace motionmap {

using LatentVector = Eigen::VectorXd;

struct EmbeddingHyper {
  double perplexity = 30.0;
  int iterations = 750;
  double exaggeration = 12.0;
  int exaggeration_iterations = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  // <= 0 selects N / 12.
  double learning_rate = 0.0;
  // Out-of-sample transform.
  int transform_neighbors = 5;
  double transform_perplexity = 2.0;
  int transform_steps = 50;
  double transform_learning_rate = 0.1;
  std::uint64_t seed = 0;

  bool operator==(const EmbeddingHyper& other) const = default;
};

struct HeatmapCell {
  int row = 0;
  int col = 0;

  auto operator<=>(const HeatmapCell&) const = default;
};

struct KlTrace {
  std::vector<int> iteration;
  std::vector<double> divergence;
  double at_exaggeration_end = 0.0;
  double final = 0.0;
};

// Exact t-SNE of a set of latents plus the affine map onto heatmap
// coordinates. Rows of `reference` and `points` are aligned.
struct Embedding2D {
  Eigen::MatrixXd reference;  // N x n latents
  Eigen::MatrixXd points;     // N x 2, raw embedding coordinates
  EmbeddingHyper hyper;
  KlTrace trace;
  // Heatmap scaling: scaled = (raw - offset) * scale + margin, per axis.
  // Axis 0 maps to heatmap rows, axis 1 to columns.
  int heatmap_size = 0;  // 0 until scale_to_heatmap
  double margin = 1.0;
  Eigen::Vector2d offset = Eigen::Vector2d::Zero();
  Eigen::Vector2d scale = Eigen::Vector2d::Ones();

  int size() const { return static_cast<int>(points.rows()); }
  bool is_scaled() const { return heatmap_size > 0; }
  Eigen::Vector2d to_heatmap(const Eigen::Vector2d& raw) const;
  // N x 2 scaled coordinates.
  Eigen::MatrixXd scaled_points() const;
};

Embedding2D fit_embedding(const Eigen::MatrixXd& latents, const EmbeddingHyper& hyper);

// Per-axis affine map sending the minimum to `margin` and the maximum to
// m - 1 - margin. Throws DomainError if an axis has zero extent.
Embedding2D scale_to_heatmap(Embedding2D emb, int m, double margin = 1.0);

// Round half up per axis, clamped to the m x m grid.
HeatmapCell quantize(const Eigen::Vector2d& scaled, int m);

// Out-of-sample placement in scaled heatmap coordinates: affinity-weighted
// mean of the k nearest reference latents' positions, refined by gradient
// descent on the new point's KL terms with the reference fixed.
Eigen::Vector2d transform_new(const Embedding2D& emb, const Eigen::VectorXd& latent);
Eigen::Vector2d transform_new_raw(const Embedding2D& emb, const Eigen::VectorXd& latent,
                                  bool refine = true);

// Conditional Gaussian affinities of one point given squared distances,
// bandwidth found by bisection so that the perplexity matches. Exposed for
// testing.
Eigen::VectorXd calibrated_affinities(const Eigen::VectorXd& squared_distances, double perplexity);

// Symmetrized joint input affinities P (N x N) used by the fit.
Eigen::MatrixXd joint_affinities(const Eigen::MatrixXd& latents, double perplexity);

// KL(P || Q) for an embedding.
double kl_divergence(const Eigen::MatrixXd& p, const Eigen::MatrixXd& points);

struct DensityRow {
  double x = 0.0;
  double y = 0.0;
  std::string group;
};

// One row per embedded point (scaled coordinates when available).
std::vector<DensityRow> export_density(const Embedding2D& emb,
                                       const std::vector<std::string>& group_labels);
std::vector<DensityRow> export_density(const Eigen::MatrixXd& points,
                                       const std::vector<std::string>& group_labels);
std::string density_tsv(const std::vector<DensityRow>& rows);

}  // namespace motionmap
