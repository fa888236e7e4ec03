// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionmap/nn/params.hpp"

#include <cmath>

#include "motionmap/error.hpp"

namespace motionmap::nn {

Matrix& ParameterStore::add(const std::string& name, Matrix value) {
  if (contains(name)) throw DomainError("parameter '" + name + "' already exists");
  return values_.emplace(name, std::move(value)).first->second;
}

Matrix& ParameterStore::add_glorot(const std::string& name, int rows, int cols) {
  const double a = std::sqrt(6.0 / (rows + cols));
  Matrix m(rows, cols);
  // Column-major fill order is part of the reproducibility contract.
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng_.uniform(-a, a);
  return add(name, std::move(m));
}

Matrix& ParameterStore::add_zeros(const std::string& name, int rows, int cols) {
  return add(name, Matrix::Zero(rows, cols));
}

Matrix& ParameterStore::at(const std::string& name) {
  auto it = values_.find(name);
  if (it == values_.end()) throw DomainError("unknown parameter '" + name + "'");
  return it->second;
}

const Matrix& ParameterStore::at(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw DomainError("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, m] : values_) n += static_cast<std::size_t>(m.size());
  return n;
}

std::vector<std::string> ParameterStore::names_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [name, m] : values_) {
    if (name.compare(0, prefix.size(), prefix) == 0) out.push_back(name);
  }
  return out;
}

}  // namespace motionmap::nn
