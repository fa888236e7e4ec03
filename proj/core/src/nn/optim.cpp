// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionmap/nn/optim.hpp"

#include <cmath>

#include "motionmap/error.hpp"

namespace motionmap::nn {

double global_norm(const Gradients& gradients) {
  double sq = 0.0;
  for (const auto& [name, g] : gradients) sq += g.squaredNorm();
  return std::sqrt(sq);
}

Gradients filter_gradients(const Gradients& gradients, const std::vector<std::string>& prefixes) {
  Gradients out;
  for (const auto& [name, g] : gradients) {
    for (const auto& p : prefixes) {
      if (name.compare(0, p.size(), p) == 0) {
        out.emplace(name, g);
        break;
      }
    }
  }
  return out;
}

void optimizer_step(ParameterStore& params, const Gradients& gradients, AdamState& state,
                    const AdamHyper& hyper) {
  for (const auto& [name, g] : gradients) {
    if (!params.contains(name)) throw DomainError("gradient for unknown parameter '" + name + "'");
    if (params.at(name).rows() != g.rows() || params.at(name).cols() != g.cols()) {
      throw ShapeError("gradient shape mismatch for '" + name + "'");
    }
    if (!g.allFinite()) throw DivergenceError("non-finite gradient for parameter '" + name + "'");
  }
  double factor = 1.0;
  if (hyper.clip_norm > 0.0) {
    const double norm = global_norm(gradients);
    if (norm > hyper.clip_norm) factor = hyper.clip_norm / norm;
  }

  ++state.step;
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  for (const auto& [name, grad] : gradients) {
    Matrix& w = params.at(name);
    auto [m_it, m_new] = state.first_moment.try_emplace(name, Matrix::Zero(w.rows(), w.cols()));
    auto [v_it, v_new] = state.second_moment.try_emplace(name, Matrix::Zero(w.rows(), w.cols()));
    Matrix& m = m_it->second;
    Matrix& v = v_it->second;
    const Matrix g = grad * factor;
    m = hyper.beta1 * m + (1.0 - hyper.beta1) * g;
    v = hyper.beta2 * v + (1.0 - hyper.beta2) * g.cwiseProduct(g);
    w.array() -= hyper.step_size * (m.array() / bc1) /
                 ((v.array() / bc2).sqrt() + hyper.epsilon);
    if (!w.allFinite()) throw DivergenceError("parameter '" + name + "' became non-finite");
  }
}

}  // namespace motionmap::nn
