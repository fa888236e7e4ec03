// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionmap/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "motionmap/error.hpp"
#include "motionmap/rng.hpp"

namespace motionmap {

using nn::Matrix;
using nn::Tape;
using nn::Var;

namespace {

void add_gru(nn::ParameterStore& p, const std::string& prefix, int input, int hidden) {
  p.add_glorot(prefix + "Wi", 3 * hidden, input);
  p.add_glorot(prefix + "Wh", 3 * hidden, hidden);
  p.add_zeros(prefix + "bi", 3 * hidden, 1);
  p.add_zeros(prefix + "bh", 3 * hidden, 1);
}

Var gru_step(Tape& t, const nn::ParameterStore& p, const std::string& prefix, Var x, Var h) {
  return t.gru_cell(x, h, t.parameter(p, prefix + "Wi"), t.parameter(p, prefix + "Wh"),
                    t.parameter(p, prefix + "bi"), t.parameter(p, prefix + "bh"));
}

Matrix column(const LatentVector& v) { return Matrix(v); }

}  // namespace

AutoencoderModel::AutoencoderModel(const AutoencoderDims& dims, std::uint64_t seed)
    : dims_(dims), params_(seed) {
  if (dims.obs_frames < 1 || dims.future_frames < 1 || dims.joints < 1 || dims.latent < 1 ||
      dims.uncertainty_hidden < 1) {
    throw ShapeError("AutoencoderModel: all dimensions must be positive");
  }
  const int n = dims.latent;
  const int d = dims.pose_dim();
  add_gru(params_, "ex.", d, n);
  add_gru(params_, "ey.", d, n);
  params_.add_glorot("f.W1", n, 2 * n);
  params_.add_zeros("f.b1", n, 1);
  params_.add_glorot("f.W2", n, n);
  params_.add_zeros("f.b2", n, 1);
  add_gru(params_, "d.", d, n);
  params_.add_glorot("d.Wo", d, n);
  params_.add_zeros("d.bo", d, 1);
  params_.add_glorot("u.W1", dims.uncertainty_hidden, n);
  params_.add_zeros("u.b1", dims.uncertainty_hidden, 1);
  params_.add_glorot("u.W2", dims.total_frames() * dims.joints, dims.uncertainty_hidden);
  params_.add_zeros("u.b2", dims.total_frames() * dims.joints, 1);
}

AutoencoderModel::AutoencoderModel(const AutoencoderDims& dims, nn::ParameterStore params)
    : dims_(dims), params_(std::move(params)) {
  const auto expect = [&](const std::string& name, int rows, int cols) {
    if (!params_.contains(name) || params_.at(name).rows() != rows ||
        params_.at(name).cols() != cols) {
      throw ShapeError("autoencoder parameter '" + name + "' missing or mis-shaped");
    }
  };
  const int n = dims.latent;
  expect("ex.Wi", 3 * n, dims.pose_dim());
  expect("ey.Wh", 3 * n, n);
  expect("f.W1", n, 2 * n);
  expect("d.Wo", dims.pose_dim(), n);
  expect("u.W2", dims.total_frames() * dims.joints, dims.uncertainty_hidden);
}

Var AutoencoderModel::encode(Tape& t, const std::string& which,
                             const std::vector<Matrix>& frames) const {
  if (which != "ex." && which != "ey.") throw DomainError("encode: unknown encoder " + which);
  if (frames.empty()) throw ShapeError("encode: no frames");
  Var h = t.constant(Matrix::Zero(dims_.latent, frames.front().cols()));
  for (const auto& f : frames) {
    if (f.rows() != dims_.pose_dim()) throw ShapeError("encode: frame dimension mismatch");
    h = gru_step(t, params_, which, t.constant(f), h);
  }
  return h;
}

Var AutoencoderModel::fuse(Tape& t, Var zx, Var zy) const {
  if (t.value(zx).rows() != dims_.latent || t.value(zy).rows() != dims_.latent) {
    throw ShapeError("fuse: latent length mismatch");
  }
  Var hidden = t.elu(t.affine(t.parameter(params_, "f.W1"), t.concat_rows(zx, zy),
                              t.parameter(params_, "f.b1")));
  return t.affine(t.parameter(params_, "f.W2"), hidden, t.parameter(params_, "f.b2"));
}

std::vector<Var> AutoencoderModel::decode(Tape& t, Var fused) const {
  if (t.value(fused).rows() != dims_.latent) throw ShapeError("decode: latent length mismatch");
  if (!t.value(fused).allFinite()) throw DomainError("decode: non-finite latent");
  const auto batch = t.value(fused).cols();
  std::vector<Var> poses;
  poses.reserve(dims_.total_frames());
  Var h = fused;
  Var prev = t.constant(Matrix::Zero(dims_.pose_dim(), batch));
  Var wo = t.parameter(params_, "d.Wo");
  Var bo = t.parameter(params_, "d.bo");
  for (int step = 0; step < dims_.total_frames(); ++step) {
    h = gru_step(t, params_, "d.", prev, h);
    Var pose = t.affine(wo, h, bo);
    poses.push_back(pose);
    prev = pose;
  }
  return poses;
}

Var AutoencoderModel::log_variance(Tape& t, Var fused) const {
  Var hidden = t.elu(t.affine(t.parameter(params_, "u.W1"), fused, t.parameter(params_, "u.b1")));
  return t.affine(t.parameter(params_, "u.W2"), hidden, t.parameter(params_, "u.b2"));
}

void AutoencoderModel::check_sequence(const PoseSequence& seq, int frames, const char* what) const {
  if (seq.frame_count() != frames || seq.joint_count() != dims_.joints) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(frames) + " frames of " +
                     std::to_string(dims_.joints) + " joints, got " +
                     std::to_string(seq.frame_count()) + " of " +
                     std::to_string(seq.joint_count()));
  }
}

LatentVector AutoencoderModel::encode_observation(const PoseSequence& x) const {
  check_sequence(x, dims_.obs_frames, "encode_observation");
  Tape t;
  return t.value(encode(t, "ex.", batch_frames({&x}))).col(0);
}

LatentVector AutoencoderModel::encode_future(const PoseSequence& y) const {
  check_sequence(y, dims_.future_frames, "encode_future");
  Tape t;
  return t.value(encode(t, "ey.", batch_frames({&y}))).col(0);
}

LatentVector AutoencoderModel::fuse(const LatentVector& zx, const LatentVector& zy) const {
  if (zx.size() != dims_.latent || zy.size() != dims_.latent) {
    throw ShapeError("fuse: latent length mismatch");
  }
  Tape t;
  return t.value(fuse(t, t.constant(column(zx)), t.constant(column(zy)))).col(0);
}

PoseSequence AutoencoderModel::decode(const LatentVector& fused) const {
  if (fused.size() != dims_.latent) throw ShapeError("decode: latent length mismatch");
  if (!fused.allFinite()) throw DomainError("decode: non-finite latent");
  Tape t;
  const auto poses = decode(t, t.constant(column(fused)));
  PoseSequence out;
  out.frames.reserve(poses.size());
  for (Var p : poses) {
    Pose pose(dims_.joints, 3);
    Eigen::Map<Eigen::VectorXd>(pose.data(), dims_.pose_dim()) = t.value(p).col(0);
    out.frames.push_back(std::move(pose));
  }
  return out;
}

Eigen::MatrixXd AutoencoderModel::predict_uncertainty(const LatentVector& fused) const {
  if (fused.size() != dims_.latent) throw ShapeError("predict_uncertainty: latent length mismatch");
  Tape t;
  const Matrix raw = t.value(log_variance(t, t.constant(column(fused))));
  Eigen::MatrixXd var(dims_.total_frames(), dims_.joints);
  for (int f = 0; f < dims_.total_frames(); ++f) {
    for (int j = 0; j < dims_.joints; ++j) {
      var(f, j) = std::clamp(std::exp(raw(f * dims_.joints + j, 0)), Tape::kMinVariance,
                             Tape::kMaxVariance);
    }
  }
  return var;
}

std::vector<Matrix> batch_frames(const std::vector<const PoseSequence*>& seqs) {
  if (seqs.empty()) throw ShapeError("batch_frames: empty batch");
  const int frames = seqs.front()->frame_count();
  const int dim = 3 * seqs.front()->joint_count();
  std::vector<Matrix> out(frames, Matrix(dim, static_cast<Eigen::Index>(seqs.size())));
  for (std::size_t b = 0; b < seqs.size(); ++b) {
    if (seqs[b]->frame_count() != frames || 3 * seqs[b]->joint_count() != dim) {
      throw ShapeError("batch_frames: sequences differ in shape");
    }
    for (int f = 0; f < frames; ++f) {
      out[f].col(static_cast<Eigen::Index>(b)) =
          Eigen::Map<const Eigen::VectorXd>(seqs[b]->frames[f].data(), dim);
    }
  }
  return out;
}

double nll_loss(const PoseSequence& pred, const PoseSequence& target,
                const Eigen::MatrixXd& variance) {
  if (pred.frame_count() != target.frame_count() || pred.joint_count() != target.joint_count() ||
      variance.rows() != pred.frame_count() || variance.cols() != pred.joint_count()) {
    throw ShapeError("nll_loss: prediction, target and variance shapes differ");
  }
  if ((variance.array() <= 0.0).any()) throw DomainError("nll_loss: variance must be positive");
  double total = 0.0;
  for (int f = 0; f < pred.frame_count(); ++f) {
    for (int j = 0; j < pred.joint_count(); ++j) {
      const double err = (pred.frames[f].row(j) - target.frames[f].row(j)).squaredNorm();
      total += err / variance(f, j) + std::log(variance(f, j));
    }
  }
  return total / (static_cast<double>(pred.frame_count()) * pred.joint_count());
}

Var batched_nll(Tape& t, const std::vector<Var>& poses, const std::vector<Matrix>& targets,
                Var log_variance, int joints) {
  if (poses.size() != targets.size()) throw ShapeError("batched_nll: frame count mismatch");
  Var total;
  for (std::size_t f = 0; f < poses.size(); ++f) {
    Var lv = t.slice_rows(log_variance, static_cast<int>(f) * joints, joints);
    Var term = t.gaussian_nll_sum(poses[f], targets[f], lv);
    total = total.valid() ? t.add(total, term) : term;
  }
  const double count =
      static_cast<double>(poses.size()) * joints * static_cast<double>(t.value(poses[0]).cols());
  return t.scale(total, 1.0 / count);
}

namespace {

enum class Phase { kTrain, kFinetune };

TrainReport run_training(AutoencoderModel& model, const std::vector<Sample>& samples,
                         const std::vector<Sample>& pool, const MultimodalGTIndex& mmgt,
                         const SkeletonTopology& topo, const TrainOptions& opt, Phase phase,
                         const FutureLatentFn* latent_for, nn::AdamState* external_state) {
  if (samples.empty()) throw DomainError("training: empty dataset");
  if (opt.epochs < 0 || opt.batch_size < 1) throw DomainError("training: bad epochs/batch size");
  const auto& dims = model.dims();
  std::map<int, const Sample*> by_id;
  for (const auto& s : pool) by_id[s.id] = &s;

  nn::AdamState local_state;
  nn::AdamState& state = external_state ? *external_state : local_state;
  Rng rng(opt.seed);
  TrainReport report;
  std::vector<std::size_t> order(samples.size());

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t end = std::min(order.size(), start + opt.batch_size);
      std::vector<PoseSequence> targets;
      std::vector<PoseSequence> drawn_futures;
      std::vector<int> drawn_ids;
      for (std::size_t k = start; k < end; ++k) {
        const Sample& s = samples[order[k]];
        const auto& members = mmgt.members_of(s.id);
        if (members.empty()) throw DomainError("training: empty ground-truth set");
        const int drawn = members[rng.below(members.size())];
        const auto it = by_id.find(drawn);
        if (it == by_id.end()) {
          throw DomainError("training: ground truth " + std::to_string(drawn) + " not in pool");
        }
        report.draws.push_back({epoch, s.id, drawn});
        PoseSequence future = motion_transfer(s.observation, it->second->future, topo);
        targets.push_back(concat(s.observation, future));
        drawn_futures.push_back(std::move(future));
        drawn_ids.push_back(drawn);
      }
      std::vector<const PoseSequence*> obs_ptrs;
      std::vector<const PoseSequence*> fut_ptrs;
      std::vector<const PoseSequence*> tgt_ptrs;
      for (std::size_t k = start; k < end; ++k) obs_ptrs.push_back(&samples[order[k]].observation);
      for (const auto& f : drawn_futures) fut_ptrs.push_back(&f);
      for (const auto& f : targets) tgt_ptrs.push_back(&f);

      Tape t;
      Var zx = model.encode(t, "ex.", batch_frames(obs_ptrs));
      Var zy;
      if (phase == Phase::kTrain) {
        zy = model.encode(t, "ey.", batch_frames(fut_ptrs));
      } else {
        Matrix latents(dims.latent, static_cast<Eigen::Index>(drawn_ids.size()));
        for (std::size_t b = 0; b < drawn_ids.size(); ++b) {
          latents.col(static_cast<Eigen::Index>(b)) = (*latent_for)(drawn_ids[b]);
        }
        zy = t.constant(std::move(latents));
      }
      Var fused = model.fuse(t, zx, zy);
      const bool unit_variance = epoch < opt.unit_variance_epochs;
      Var log_var = unit_variance
                        ? t.constant(Matrix::Zero(dims.total_frames() * dims.joints,
                                                  static_cast<Eigen::Index>(end - start)))
                        : model.log_variance(t, fused);
      Var loss = batched_nll(t, model.decode(t, fused), batch_frames(tgt_ptrs), log_var,
                             dims.joints);
      const double value = t.value(loss)(0, 0);
      if (!std::isfinite(value)) {
        throw DivergenceError("autoencoder loss became non-finite at epoch " +
                              std::to_string(epoch + 1));
      }
      t.backward(loss);
      nn::Gradients grads = t.parameter_gradients();
      if (phase == Phase::kFinetune) grads = nn::filter_gradients(grads, {"f.", "d."});
      nn::optimizer_step(model.params(), grads, state, opt.adam);
      epoch_loss += value * static_cast<double>(end - start);
    }
    epoch_loss /= static_cast<double>(samples.size());
    report.loss_curve.push_back(epoch_loss);
    if (opt.on_epoch) opt.on_epoch(epoch, epoch_loss);
  }
  return report;
}

}  // namespace

TrainReport train_autoencoder(AutoencoderModel& model, const std::vector<Sample>& samples,
                              const std::vector<Sample>& pool, const MultimodalGTIndex& mmgt,
                              const SkeletonTopology& topo, const TrainOptions& options,
                              nn::AdamState* state) {
  return run_training(model, samples, pool, mmgt, topo, options, Phase::kTrain, nullptr, state);
}

TrainReport finetune(AutoencoderModel& model, const std::vector<Sample>& samples,
                     const std::vector<Sample>& pool, const MultimodalGTIndex& mmgt,
                     const SkeletonTopology& topo, const FutureLatentFn& latent_for,
                     const TrainOptions& options, nn::AdamState* state) {
  if (!latent_for) throw DomainError("finetune: no latent source");
  return run_training(model, samples, pool, mmgt, topo, options, Phase::kFinetune, &latent_for,
                      state);
}

double decode_loss(const AutoencoderModel& model, const std::vector<Sample>& samples,
                   const FutureLatentFn& latent_for) {
  if (samples.empty()) throw DomainError("decode_loss: empty dataset");
  double total = 0.0;
  for (const auto& s : samples) {
    const LatentVector fused = model.fuse(model.encode_observation(s.observation), latent_for(s.id));
    total += nll_loss(model.decode(fused), concat(s.observation, s.future),
                      model.predict_uncertainty(fused));
  }
  return total / static_cast<double>(samples.size());
}

}  // namespace motionmap
