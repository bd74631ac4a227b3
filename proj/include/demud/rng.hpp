#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace demud {

/// Deterministic random source with a stable, platform-independent output
/// stream. The standard distributions are implementation-defined, so every
/// draw here is derived directly from the raw mt19937_64 words.
class Rng {
 public:
  /// Recorded in manifests so a run can be tied to the generator revision.
  static constexpr const char* kName = "mt19937_64/demud-v1";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Unbiased uniform integer in [0, bound). bound must be > 0.
  std::uint64_t uniform_index(std::uint64_t bound);

  /// Standard normal via the Box-Muller transform.
  double normal();

  /// Fisher-Yates permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// SplitMix64 finalizer; used to derive independent per-trial seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace demud
