#pragma once

#include <cstdint>

namespace metaselect {

// Deterministic, parallelism-independent randomness.
//
// Every random stream is keyed by a tuple of 64-bit words folded through the
// splitmix64 finalizer, and draws map splitmix64 outputs to Normal variates
// through the inverse CDF (Wichura's AS241). A (replication, condition)
// stream is therefore a pure function of its key: any scheduling of work
// across threads reproduces the same bits.

inline constexpr std::uint64_t kSeedFoldConstant = 0x9E3779B97F4A7C15ull;

// Fixed default so bare CLI runs are reproducible.
inline constexpr std::uint64_t kDefaultBaseSeed = 123456789ull;

// splitmix64 finalizer: 64-bit xorshift-multiply avalanche.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

// Folds one key word into a seed.
constexpr std::uint64_t fold_seed(std::uint64_t seed, std::uint64_t word) {
  return mix64(seed + kSeedFoldConstant * (word + 1));
}

// Identifies one replication of a simulation batch.
struct SeedSpec {
  std::uint64_t base_seed = kDefaultBaseSeed;
  std::uint64_t replication_index = 0;
};

// Per-stream seed: pure function of (base_seed, replication_index, condition).
constexpr std::uint64_t stream_seed(const SeedSpec& seed, std::uint64_t condition_index) {
  return fold_seed(fold_seed(seed.base_seed, seed.replication_index), condition_index);
}

// Inverse of the standard Normal CDF, accurate to ~1e-15 over (0, 1).
double normal_quantile(double p);

// Gaussian draw stream over one seeded splitmix64 sequence.
class NormalStream {
 public:
  explicit NormalStream(std::uint64_t seed) : state_(seed) {}

  // Uniform strictly inside (0, 1).
  double next_uniform() {
    state_ += kSeedFoldConstant;
    const std::uint64_t z = mix64(state_);
    return (static_cast<double>(z >> 11) + 0.5) * 0x1.0p-53;
  }

  double next_normal(double mean, double sd) {
    return mean + sd * normal_quantile(next_uniform());
  }

 private:
  std::uint64_t state_;
};

}  // namespace metaselect
