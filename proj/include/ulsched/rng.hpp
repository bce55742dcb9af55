// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace ulsched {

// Deterministic uniform stream. All sampling in the project goes through
// inverse-CDF transforms of next_uniform() so that a (seed, draw order)
// pair fully determines a run on any platform.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double next_uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n).
  std::uint64_t next_index(std::uint64_t n) {
    return static_cast<std::uint64_t>(next_uniform() * static_cast<double>(n)) % n;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ulsched
