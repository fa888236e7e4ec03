// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "motionmap/rng.hpp"

namespace motionmap::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Gradients keyed by parameter name.
using Gradients = std::map<std::string, Matrix>;

// Named parameter arrays. std::map keeps iteration order (and therefore
// every seeded initialization and optimizer sweep) deterministic.
class ParameterStore {
 public:
  ParameterStore() = default;
  explicit ParameterStore(std::uint64_t seed) : seed_(seed), rng_(seed) {}

  // uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)), fan_in = cols.
  Matrix& add_glorot(const std::string& name, int rows, int cols);
  Matrix& add_zeros(const std::string& name, int rows, int cols);
  Matrix& add(const std::string& name, Matrix value);

  bool contains(const std::string& name) const { return values_.count(name) != 0; }
  Matrix& at(const std::string& name);
  const Matrix& at(const std::string& name) const;

  const std::map<std::string, Matrix>& values() const { return values_; }
  std::map<std::string, Matrix>& values() { return values_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t scalar_count() const;

  // Names starting with `prefix`, in order.
  std::vector<std::string> names_with_prefix(const std::string& prefix) const;

  bool operator==(const ParameterStore& other) const { return values_ == other.values_; }

 private:
  std::uint64_t seed_ = 0;
  Rng rng_;
  std::map<std::string, Matrix> values_;
};

}  // namespace motionmap::nn
