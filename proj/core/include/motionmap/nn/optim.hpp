// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "motionmap/nn/params.hpp"

namespace motionmap::nn {

struct AdamHyper {
  double step_size = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Rescale the gradient set when its global L2 norm exceeds this; 0 disables.
  double clip_norm = 0.0;
};

struct AdamState {
  std::int64_t step = 0;
  std::map<std::string, Matrix> first_moment;
  std::map<std::string, Matrix> second_moment;

  bool operator==(const AdamState& other) const = default;
};

// One bias-corrected Adam update of every parameter named in `gradients`.
// Parameters without a gradient entry are left untouched (this is how
// frozen sub-networks are expressed). Throws DivergenceError naming the
// offending parameter when a gradient or updated value is non-finite.
void optimizer_step(ParameterStore& params, const Gradients& gradients, AdamState& state,
                    const AdamHyper& hyper);

double global_norm(const Gradients& gradients);

// Keep only gradients whose names start with one of `prefixes`.
Gradients filter_gradients(const Gradients& gradients, const std::vector<std::string>& prefixes);

}  // namespace motionmap::nn
