#pragma once

#include <cstdint>
#include <random>

namespace narendra {

/// SplitMix64 finalizer. A bijection on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// Seed of replica `index` under `master`:
///   mix64(master XOR mix64(index + golden)).
/// For a fixed master this is a composition of bijections, so distinct
/// indices never collide.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(master ^ mix64(index + kGolden));
}

/// Per-replica sub-streams. Stream ids are fixed: the uniform draws I_n, then
/// the arm-A source, then the arm-B source.
enum class Substream : std::uint64_t { uniform = 0, arm_a = 1, arm_b = 2 };

constexpr std::uint64_t substream_seed(std::uint64_t replica_seed, Substream s) noexcept {
  return mix64(replica_seed + (static_cast<std::uint64_t>(s) + 1) * kGolden);
}

/// Portable uniform stream: std::mt19937_64 output is fixed by the standard and
/// the conversion to [0,1) is done here rather than by a library distribution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// 53-bit uniform in [0,1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace narendra
