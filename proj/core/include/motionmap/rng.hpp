// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace motionmap {

// Portable random source. std::mt19937_64 is fully specified by the standard,
// but the std:: distributions are not, so the conversions to real numbers are
// done here to keep seeded runs identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  // Standard normal via Box-Muller; no cached second value so the stream
  // position depends only on the number of calls.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  std::string state() const;
  void set_state(const std::string& text);

 private:
  std::mt19937_64 engine_;
};

// Derive an independent seed for a named sub-stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace motionmap
