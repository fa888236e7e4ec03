// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <numbers>

#include "motionmap/autoencoder.hpp"
#include "motionmap/embedding.hpp"
#include "motionmap/kinematics.hpp"
#include "motionmap/motionmap.hpp"
#include "motionmap/nn/tape.hpp"
#include "motionmap/rng.hpp"

namespace mm = motionmap;

namespace {

mm::Pose random_pose(mm::Rng& rng, const mm::SkeletonTopology& topo) {
  mm::SphericalPose s;
  const int j = topo.joint_count();
  s.rho = Eigen::VectorXd(j);
  s.theta = Eigen::VectorXd(j);
  s.phi = Eigen::VectorXd(j);
  for (int i = 0; i < j; ++i) {
    s.rho[i] = i == 0 ? 0.0 : rng.uniform(0.05, 0.5);
    s.theta[i] = rng.uniform(0.1, std::numbers::pi - 0.1);
    s.phi[i] = rng.uniform(-3.0, 3.0);
  }
  return mm::spherical_to_cartesian(s, topo);
}

mm::PoseSequence random_sequence(mm::Rng& rng, const mm::SkeletonTopology& topo, int frames) {
  mm::PoseSequence seq;
  for (int f = 0; f < frames; ++f) seq.frames.push_back(random_pose(rng, topo));
  return seq;
}

void BM_SphericalRoundTrip(benchmark::State& state) {
  const auto topo = mm::SkeletonTopology::human17();
  mm::Rng rng(1);
  const mm::Pose p = random_pose(rng, topo);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mm::spherical_to_cartesian(mm::cartesian_to_spherical(p, topo), topo));
  }
}
BENCHMARK(BM_SphericalRoundTrip);

void BM_MotionTransfer(benchmark::State& state) {
  const auto topo = mm::SkeletonTopology::human17();
  mm::Rng rng(2);
  const auto x = random_sequence(rng, topo, 25);
  const auto y = random_sequence(rng, topo, 100);
  for (auto _ : state) benchmark::DoNotOptimize(mm::motion_transfer(x, y, topo));
}
BENCHMARK(BM_MotionTransfer);

// Forward and backward of the autoencoder loss over one batch; arg = latent size.
void BM_AutoencoderStep(benchmark::State& state) {
  mm::AutoencoderDims dims;
  dims.latent = static_cast<int>(state.range(0));
  dims.uncertainty_hidden = dims.latent;
  const mm::AutoencoderModel model(dims, 3);
  const auto topo = mm::SkeletonTopology::human17();
  mm::Rng rng(3);
  const int batch = 8;
  std::vector<mm::nn::Matrix> obs(dims.obs_frames, mm::nn::Matrix(dims.pose_dim(), batch));
  std::vector<mm::nn::Matrix> fut(dims.future_frames, mm::nn::Matrix(dims.pose_dim(), batch));
  for (int b = 0; b < batch; ++b) {
    const auto seq = random_sequence(rng, topo, dims.total_frames());
    for (int f = 0; f < dims.total_frames(); ++f) {
      const Eigen::Map<const Eigen::VectorXd> flat(seq.frames[f].data(), dims.pose_dim());
      (f < dims.obs_frames ? obs[f] : fut[f - dims.obs_frames]).col(b) = flat;
    }
  }
  for (auto _ : state) {
    mm::nn::Tape t;
    const auto fused = model.fuse(t, model.encode(t, "ex.", obs), model.encode(t, "ey.", fut));
    const auto frames = model.decode(t, fused);
    mm::nn::Var loss = t.sum(frames.back());
    t.backward(loss);
    benchmark::DoNotOptimize(t.grad(fused));
  }
}
BENCHMARK(BM_AutoencoderStep)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_JointAffinities(benchmark::State& state) {
  const auto n = state.range(0);
  mm::Rng rng(4);
  Eigen::MatrixXd z(n, 64);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(mm::joint_affinities(z, 30.0));
}
BENCHMARK(BM_JointAffinities)->Arg(150)->Arg(600)->Unit(benchmark::kMillisecond);

void BM_TransformNew(benchmark::State& state) {
  mm::Rng rng(5);
  Eigen::MatrixXd z(300, 32);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
  mm::EmbeddingHyper h;
  h.iterations = 300;
  const auto emb = mm::scale_to_heatmap(mm::fit_embedding(z, h), 64);
  const Eigen::VectorXd q = z.row(7).transpose();
  for (auto _ : state) benchmark::DoNotOptimize(mm::transform_new(emb, q));
}
BENCHMARK(BM_TransformNew);

void BM_ExtractMaxima(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  mm::Rng rng(6);
  std::vector<mm::HeatmapCell> cells;
  for (int i = 0; i < 8; ++i) {
    cells.push_back({static_cast<int>(rng.below(m)), static_cast<int>(rng.below(m))});
  }
  const mm::Heatmap hm = mm::stamp_heatmap(cells, 1.5, m);
  for (auto _ : state) benchmark::DoNotOptimize(mm::extract_maxima(hm, 0.2, 3));
}
BENCHMARK(BM_ExtractMaxima)->Arg(64)->Arg(128);

void BM_CodebookFallback(benchmark::State& state) {
  mm::Rng rng(7);
  mm::Codebook cb(64, 16);
  for (int i = 0; i < 200; ++i) {
    const mm::HeatmapCell c{static_cast<int>(rng.below(64)), static_cast<int>(rng.below(64))};
    if (!cb.contains(c)) cb.insert(c, {mm::LatentVector::Zero(16), 1});
  }
  int r = 0;
  for (auto _ : state) {
    const mm::HeatmapCell q{r % 64, (r * 7) % 64};
    benchmark::DoNotOptimize(cb.find(q, 100.0));
    ++r;
  }
}
BENCHMARK(BM_CodebookFallback);

}  // namespace

BENCHMARK_MAIN();
