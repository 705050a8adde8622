#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace sd {

/// Independent randomness streams. Every draw in the library is a function of
/// (seed, stream), so adding a consumer never perturbs an existing one.
enum class Stream : std::uint64_t {
  kFeatures = 1,
  kEvalFeatures = 2,
  kSource = 3,
  kTarget = 4,
  kNetInit = 5,
  kBatch = 6,
  kShapeJitter = 7,
  kSweep = 8,
  kTest = 1000,
};

std::uint64_t splitmix64(std::uint64_t x);

/// Deterministic generator: std::mt19937_64 keyed by splitmix64(seed, stream).
///
/// Conversions to real numbers are done here rather than through <random>
/// distributions, whose algorithms are implementation-defined. Uniforms use the
/// top 53 bits; normals use the Box-Muller transform and cache the second variate.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream);
  Rng(std::uint64_t seed, Stream stream) : Rng(seed, static_cast<std::uint64_t>(stream)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Uniform integer on [0, n), unbiased (rejection sampling).
  std::size_t index(std::size_t n);

  /// Child stream derived from this generator's key; does not advance this generator.
  Rng split(std::uint64_t child) const;

 private:
  std::uint64_t key_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sd
