// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "motionmap/config.hpp"
#include "motionmap/kinematics.hpp"
#include "motionmap/nn/params.hpp"
#include "motionmap/nn/tape.hpp"
#include "motionmap/rng.hpp"

namespace testing {

// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

// Random 17-joint pose with link lengths in [0.05, 0.5].
motionmap::Pose random_pose(motionmap::Rng& rng, const motionmap::SkeletonTopology& topo);
motionmap::PoseSequence random_sequence(motionmap::Rng& rng, const motionmap::SkeletonTopology& topo,
                                        int frames);

// Relative error ||a - b|| / max(||a||, ||b||, floor).
double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double floor = 1e-10);

// Builds a scalar loss on a tape from parameters in `store`.
using LossBuilder = std::function<motionmap::nn::Var(motionmap::nn::Tape&,
                                                     const motionmap::nn::ParameterStore&)>;

// Worst per-parameter relative error between tape gradients and central
// differences (step h). At most `max_entries` randomly chosen entries per
// parameter are probed.
double gradient_check(motionmap::nn::ParameterStore& store, const LossBuilder& build,
                      motionmap::Rng& rng, int max_entries = 40, double h = 1e-6);

// Small configuration that trains end to end in seconds.
motionmap::RunConfig tiny_config(const std::filesystem::path& out);

// A fully trained tiny run, built once per process and shared by tests.
const motionmap::RunConfig& tiny_run();

}  // namespace testing
