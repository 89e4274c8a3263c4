#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace ccs::nn {

// Counter-based generator: output i is splitmix64's finalizer applied to
// seed + i·golden-gamma. The stream is a pure function of (seed, counter), so
// a checkpoint only needs those two words to resume it.
class Rng {
 public:
  static constexpr std::string_view kAlgorithm = "splitmix64-counter";

  explicit Rng(std::uint64_t seed = 0, std::uint64_t counter = 0) : seed_(seed), counter_(counter) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);
  // Standard normal via Box–Muller (one draw consumes two uniforms).
  double normal();
  std::vector<double> normal_vector(std::size_t n);

  // Independent child stream; advances this stream by one draw.
  Rng split();

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

// Deterministic mixing of several words into a seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace ccs::nn
