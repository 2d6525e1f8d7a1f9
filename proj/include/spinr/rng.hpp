#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace spinr {

/// Consumers of randomness. Each one draws from its own substream so that,
/// for example, changing the number of attack trials never shifts the
/// initialization of a model trained with the same seed.
enum class RngStream : std::uint32_t {
  kInit = 1,
  kAttack = 2,
  kChannel = 3,
  kTest = 0xffff,
};

/// Seedable generator, version 1: std::mt19937_64 keyed through
/// std::seed_seq{seed_lo, seed_hi, stream, substream, version}.
class Rng {
 public:
  static constexpr std::uint32_t kVersion = 1;

  explicit Rng(std::uint64_t seed, RngStream stream = RngStream::kInit,
               std::uint64_t substream = 0);

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);
  double normal(double mean, double stddev);
  bool bernoulli(double p);
  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace spinr
