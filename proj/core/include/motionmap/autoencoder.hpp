// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "motionmap/data.hpp"
#include "motionmap/embedding.hpp"
#include "motionmap/kinematics.hpp"
#include "motionmap/nn/optim.hpp"
#include "motionmap/nn/params.hpp"
#include "motionmap/nn/tape.hpp"

namespace motionmap {

struct AutoencoderDims {
  int obs_frames = 25;
  int future_frames = 100;
  int joints = 17;
  int latent = 128;
  int uncertainty_hidden = 128;

  int total_frames() const { return obs_frames + future_frames; }
  int pose_dim() const { return 3 * joints; }
  bool operator==(const AutoencoderDims& other) const = default;
};

// Observation encoder E_X and future encoder E_Y (single-layer GRUs over the
// flattened per-frame poses, the final hidden state being the latent), the
// fusion MLP f, the autoregressive GRU-cell decoder D emitting the whole
// observation+future sequence, and the log-variance head U.
//
// Parameter names are prefixed by component: "ex.", "ey.", "f.", "d.", "u.".
class AutoencoderModel {
 public:
  AutoencoderModel() = default;
  AutoencoderModel(const AutoencoderDims& dims, std::uint64_t seed);
  AutoencoderModel(const AutoencoderDims& dims, nn::ParameterStore params);

  const AutoencoderDims& dims() const { return dims_; }
  const nn::ParameterStore& params() const { return params_; }
  nn::ParameterStore& params() { return params_; }

  LatentVector encode_observation(const PoseSequence& observation) const;
  LatentVector encode_future(const PoseSequence& future) const;
  LatentVector fuse(const LatentVector& zx, const LatentVector& zy) const;
  // total_frames() pelvis-centered poses: reconstruction of X then forecast.
  PoseSequence decode(const LatentVector& fused) const;
  // (total_frames x joints) variances, exp of the head output clamped to
  // [1e-6, 1e6].
  Eigen::MatrixXd predict_uncertainty(const LatentVector& fused) const;

  // Batched building blocks on a tape. `frames` holds one (3J x B) matrix
  // per time step.
  nn::Var encode(nn::Tape& tape, const std::string& which,
                 const std::vector<nn::Matrix>& frames) const;
  nn::Var fuse(nn::Tape& tape, nn::Var zx, nn::Var zy) const;
  std::vector<nn::Var> decode(nn::Tape& tape, nn::Var fused) const;
  nn::Var log_variance(nn::Tape& tape, nn::Var fused) const;

  bool operator==(const AutoencoderModel& other) const {
    return dims_ == other.dims_ && params_ == other.params_;
  }

 private:
  void check_sequence(const PoseSequence& seq, int frames, const char* what) const;

  AutoencoderDims dims_;
  nn::ParameterStore params_;
};

// Stack the given frames of several sequences column-wise: result[t] is the
// (3J x B) matrix of frame t.
std::vector<nn::Matrix> batch_frames(const std::vector<const PoseSequence*>& seqs);

// Mean over frames and joints of |pred - target|^2 / var + log var, the
// squared error taken over the 3D joint residual.
double nll_loss(const PoseSequence& pred, const PoseSequence& target,
                const Eigen::MatrixXd& variance);

// Tape form of nll_loss for a batch: `poses` are the decoder outputs,
// `targets` one (3J x B) matrix per frame, `log_variance` ((T*J) x B).
nn::Var batched_nll(nn::Tape& tape, const std::vector<nn::Var>& poses,
                    const std::vector<nn::Matrix>& targets, nn::Var log_variance, int joints);

struct TrainOptions {
  int epochs = 100;
  int batch_size = 16;
  nn::AdamHyper adam{1e-3, 0.9, 0.999, 1e-8, 5.0};
  std::uint64_t seed = 0;
  // Leading epochs trained with unit variance (the uncertainty head is not
  // used and receives no update).
  int unit_variance_epochs = 0;
  // Called after every epoch with (epoch index, mean loss).
  std::function<void(int, double)> on_epoch;
};

struct GroundTruthDraw {
  int epoch = 0;
  int sample_id = 0;
  int drawn_id = 0;
};

struct TrainReport {
  std::vector<double> loss_curve;  // mean loss per epoch
  std::vector<GroundTruthDraw> draws;
};

// Supplies the latent that stands in for z_y of a training future during
// fine-tuning (the codebook mean at that future's heatmap cell).
using FutureLatentFn = std::function<LatentVector(int future_sample_id)>;

// Step 1 training. Each epoch visits the samples in a seeded random order;
// per sample one ground truth is drawn uniformly from its multimodal set,
// re-expressed on the sample's skeleton, and the Gaussian NLL of the
// reconstruction of X followed by that future is minimized.
// `pool` resolves member ids to samples (usually the training split).
TrainReport train_autoencoder(AutoencoderModel& model, const std::vector<Sample>& samples,
                              const std::vector<Sample>& pool, const MultimodalGTIndex& mmgt,
                              const SkeletonTopology& topo, const TrainOptions& options,
                              nn::AdamState* state = nullptr);

// Same procedure with z_y replaced by `latent_for` of the drawn future and
// only the fusion ("f.") and decoder ("d.") parameters updated.
TrainReport finetune(AutoencoderModel& model, const std::vector<Sample>& samples,
                     const std::vector<Sample>& pool, const MultimodalGTIndex& mmgt,
                     const SkeletonTopology& topo, const FutureLatentFn& latent_for,
                     const TrainOptions& options, nn::AdamState* state = nullptr);

// Mean Gaussian NLL (as nll_loss) of decoding fuse(z_x, latent_for(sample)) against each
// sample's own observation+future.
double decode_loss(const AutoencoderModel& model, const std::vector<Sample>& samples,
                   const FutureLatentFn& latent_for);

}  // namespace motionmap
