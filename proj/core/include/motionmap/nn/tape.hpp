// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "motionmap/nn/params.hpp"

namespace motionmap::nn {

// Handle to a node recorded on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode differentiation over column-batched matrices: every
// activation is (features x batch). Operations are recorded in creation
// order, so replaying them backwards visits children before parents.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  Var constant(Matrix value);
  // A parameter leaf. Repeated calls with the same name return the same node
  // so gradients from every use accumulate in one place.
  Var parameter(const ParameterStore& store, const std::string& name);

  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  // Zero matrix if no gradient reached the node.
  Matrix grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // -- elementwise and linear algebra
  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);                 // Hadamard
  Var scale(Var a, double s);
  Var add_bias(Var x, Var bias);         // bias (rows x 1) broadcast over columns
  Var affine(Var w, Var x, Var bias);    // w * x + bias
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var elu(Var a);
  Var exp(Var a);
  Var clamp(Var a, double lo, double hi);  // zero gradient outside [lo, hi]

  // -- structural
  Var concat_rows(Var a, Var b);
  Var slice_rows(Var a, int begin, int count);
  Var reshape(Var a, int rows, int cols);  // column-major reinterpretation

  // -- recurrent cell (gate order r, z, n; weights stacked in that order)
  // r = sig(Wi_r x + bi_r + Wh_r h + bh_r)
  // z = sig(Wi_z x + bi_z + Wh_z h + bh_z)
  // n = tanh(Wi_n x + bi_n + r * (Wh_n h + bh_n))
  // h' = (1 - z) * n + z * h
  Var gru_cell(Var x, Var h, Var wi, Var wh, Var bi, Var bh);

  // -- reductions and losses (1 x 1 results)
  Var sum(Var a);
  Var mean(Var a);
  // Sum over joints and batch of |pred_j - target_j|^2 / s2 + log s2 with
  // s2 = clamp(exp(logvar), kMinVariance, kMaxVariance). pred/target are
  // (3J x B), logvar is (J x B).
  Var gaussian_nll_sum(Var pred, const Matrix& target, Var logvar);
  // Sum of -[w t log p + (1 - t) log(1 - p)] with p clamped to
  // [kMinProbability, 1 - kMinProbability].
  Var weighted_bce_sum(Var prob, const Matrix& target, double positive_weight);

  // Accumulate d(seed . output)/d(node) for every node.
  void backward(Var output, const Matrix& seed);
  void backward(Var scalar_output) { backward(scalar_output, Matrix::Ones(1, 1)); }

  // Gradients of all parameter leaves, keyed by name.
  Gradients parameter_gradients() const;

  static constexpr double kMinVariance = 1e-6;
  static constexpr double kMaxVariance = 1e6;
  static constexpr double kMinProbability = 1e-7;

 private:
  struct Node {
    Matrix value;
    Matrix grad;  // empty until something flows in
    std::function<void(Tape&, int)> backward;
    std::string param_name;
  };

  Var push(Matrix value, std::function<void(Tape&, int)> backward = {});
  void accumulate(int id, const Matrix& g);
  const Matrix& g(int id) const { return nodes_[id].grad; }

  std::vector<Node> nodes_;
  std::unordered_map<std::string, int> params_;
};

}  // namespace motionmap::nn
