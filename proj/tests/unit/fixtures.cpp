// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#include "fixtures.hpp"

#include <cmath>

#include "motionmap/workflow.hpp"

namespace testing {

namespace fs = std::filesystem;
using namespace motionmap;

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("motionmap_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Pose random_pose(Rng& rng, const SkeletonTopology& topo) {
  SphericalPose s;
  const int j = topo.joint_count();
  s.root = Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0, 1));
  s.rho.resize(j);
  s.theta.resize(j);
  s.phi.resize(j);
  for (int i = 0; i < j; ++i) {
    s.rho[i] = rng.uniform(0.05, 0.5);
    s.theta[i] = rng.uniform(0.05, M_PI - 0.05);
    s.phi[i] = rng.uniform(-M_PI + 0.05, M_PI - 0.05);
  }
  s.rho[topo.root()] = 0.0;
  s.theta[topo.root()] = 0.0;
  s.phi[topo.root()] = 0.0;
  return spherical_to_cartesian(s, topo);
}

PoseSequence random_sequence(Rng& rng, const SkeletonTopology& topo, int frames) {
  PoseSequence seq;
  for (int f = 0; f < frames; ++f) seq.frames.push_back(random_pose(rng, topo));
  return seq;
}

double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double floor) {
  return (a - b).norm() / std::max({a.norm(), b.norm(), floor});
}

double gradient_check(nn::ParameterStore& store, const LossBuilder& build, Rng& rng,
                      int max_entries, double h) {
  nn::Tape tape;
  const nn::Var loss = build(tape, store);
  tape.backward(loss);
  const nn::Gradients grads = tape.parameter_gradients();
  auto eval = [&]() {
    nn::Tape t;
    return t.value(build(t, store))(0, 0);
  };
  double worst = 0.0;
  for (auto& [name, value] : store.values()) {
    const auto it = grads.find(name);
    const Eigen::MatrixXd analytic =
        it == grads.end() ? Eigen::MatrixXd::Zero(value.rows(), value.cols()) : it->second;
    std::vector<Eigen::Index> idx(value.size());
    for (Eigen::Index i = 0; i < value.size(); ++i) idx[i] = i;
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    if (static_cast<int>(idx.size()) > max_entries) idx.resize(max_entries);
    Eigen::VectorXd a(idx.size()), n(idx.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      double& x = value.data()[idx[k]];
      const double x0 = x;
      x = x0 + h;
      const double up = eval();
      x = x0 - h;
      const double down = eval();
      x = x0;
      n[k] = (up - down) / (2 * h);
      a[k] = analytic.data()[idx[k]];
    }
    worst = std::max(worst, relative_error(a, n, 1e-7));
  }
  return worst;
}

RunConfig tiny_config(const fs::path& out) {
  RunConfig c;
  c.seed = 7;
  c.generator.sequences_per_family = 6;
  c.generator.prefix_frames = 12;
  c.generator.motion_frames = 20;
  c.generator.preparation_frames = 6;
  c.data.obs_frames = 10;
  c.data.future_frames = 20;
  c.data.stride = 10;
  c.data.tau = 0.06;
  c.data.test_fraction = 0.34;
  c.autoencoder.latent = 8;
  c.autoencoder.uncertainty_hidden = 8;
  c.autoencoder.epochs = 4;
  c.autoencoder.unit_variance_epochs = 2;
  c.autoencoder.batch_size = 8;
  c.autoencoder.finetune_epochs = 2;
  c.embedding.perplexity = 5.0;
  c.embedding.iterations = 150;
  c.embedding.exaggeration_iterations = 50;
  c.motionmap.settings.heatmap_size = 16;
  c.motionmap.hidden = 8;
  c.motionmap.conv_channels = 4;
  c.motionmap.epochs = 3;
  c.paths.out = out.string();
  c.validate();
  return c;
}

const RunConfig& tiny_run() {
  static const RunConfig config = [] {
    RunConfig c = tiny_config(temp_dir("tiny_run"));
    run_generate(c);
    run_train(c, false, {});
    return c;
  }();
  return config;
}

}  // namespace testing
