// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "motionmap/nn/optim.hpp"
#include "motionmap/nn/params.hpp"

namespace motionmap::nn {

// Versioned binary container for checkpoints.
//
// Layout (all integers little-endian, reals IEEE-754 binary64):
//   "MMAP1"                         5-byte magic
//   u64 spec_hash                   hash of the configuration that produced it
//   u64 matrix_count, then per matrix:
//     u32 name_len, name bytes, u64 rows, u64 cols, rows*cols f64 (column-major)
//   u64 text_count, then per text:
//     u32 name_len, name bytes, u64 len, bytes
//   u64 FNV-1a checksum of everything above
//
// Entries are kept sorted by name, so saving the same content always
// yields the same bytes.
class Container {
 public:
  std::uint64_t spec_hash = 0;
  std::map<std::string, Matrix> matrices;
  std::map<std::string, std::string> texts;

  void put(const std::string& name, Matrix m) { matrices[name] = std::move(m); }
  void put_text(const std::string& name, std::string t) { texts[name] = std::move(t); }
  const Matrix& matrix(const std::string& name) const;
  const std::string& text(const std::string& name) const;
  bool has_matrix(const std::string& name) const { return matrices.count(name) != 0; }
  bool has_text(const std::string& name) const { return texts.count(name) != 0; }

  // Parameter store under "<prefix>/<name>"; the seed goes to a text entry.
  void put_params(const std::string& prefix, const ParameterStore& store);
  ParameterStore get_params(const std::string& prefix) const;
  void put_adam(const std::string& prefix, const AdamState& state);
  AdamState get_adam(const std::string& prefix) const;

  void write(std::ostream& os) const;
  static Container read(std::istream& is);
  void save(const std::filesystem::path& path) const;
  static Container load(const std::filesystem::path& path);

  bool operator==(const Container& other) const = default;
};

inline constexpr char kContainerMagic[] = "MMAP1";

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a(const std::string& s);

}  // namespace motionmap::nn
