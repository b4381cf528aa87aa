// Copyright 2026 The FDNAS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace fdnas {

/// Mixes a base seed with stream identifiers (client id, round, purpose tag)
/// into an independent 64-bit seed. Pure function, stable across platforms.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> stream);

/// Seeded random source with platform-stable draws.
///
/// The engine (mt19937_64) is fully specified by the standard; the standard
/// distributions are not, so uniform/normal/shuffle are implemented here on
/// top of raw engine output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double normal();
  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }
  template <typename T>
  void shuffle(std::vector<T>& items) {
    shuffle(std::span<T>(items));
  }

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

// Stream tags for derive_seed, kept distinct so purposes never share draws.
namespace stream {
inline constexpr std::uint64_t kInit = 0x1001;
inline constexpr std::uint64_t kClient = 0x1002;
inline constexpr std::uint64_t kParticipation = 0x1003;
inline constexpr std::uint64_t kFinetune = 0x1004;
inline constexpr std::uint64_t kRetrain = 0x1005;
inline constexpr std::uint64_t kPartition = 0x1006;
inline constexpr std::uint64_t kData = 0x1007;
inline constexpr std::uint64_t kGroup = 0x1008;
}  // namespace stream

}  // namespace fdnas
