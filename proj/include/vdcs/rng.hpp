#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "vdcs/types.hpp"

namespace vdcs {

/// SplitMix64 finalizer; used to decorrelate derived seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent stream seed from a master seed and a path of
/// integer labels, e.g. derive_seed(master, {cell, trial, kNoiseStream}).
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// Seeded generator used everywhere randomness is consumed. Uniform draws use
/// an explicit 53-bit conversion so that index sampling does not depend on the
/// standard library's distribution implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double normal() { return normal_(engine_); }
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

  Vec normal_vector(Index n);
  Mat normal_matrix(Index rows, Index cols);
  /// Uniformly random direction on the unit sphere of R^n.
  Vec unit_vector(Index n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Stream labels for derive_seed; kept distinct so streams never alias.
namespace stream {
inline constexpr std::uint64_t signal = 0x5167;
inline constexpr std::uint64_t sample = 0x5a3b;
inline constexpr std::uint64_t noise = 0x4e01;
inline constexpr std::uint64_t solver = 0x501e;
inline constexpr std::uint64_t prior = 0x9121;
inline constexpr std::uint64_t coherence = 0xc0e4;
}  // namespace stream

}  // namespace vdcs
