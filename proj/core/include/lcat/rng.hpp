#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lcat {

/// Seeded 64-bit generator. Every stochastic operation takes one explicitly so
/// runs are reproducible from a single integer seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1).
  double uniform() { return std::generate_canonical<double, 64>(engine_); }
  /// Uniform double in (0, 1].
  double uniform_open_low() { return 1.0 - uniform(); }
  double normal() { return normal_(engine_); }
  double normal(double mean, double stddev) { return mean + stddev * normal_(engine_); }
  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p) { return uniform() < p; }
  /// Number of failures before the next success of a Bernoulli(p) stream.
  /// Returns UINT64_MAX when p == 0.
  std::uint64_t geometric_skip(double p);

  std::uint64_t next_u64() { return engine_(); }
  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;
/// FNV-1a hash of a tag string.
std::uint64_t hash_tag(std::string_view tag) noexcept;
/// Stable per-run seed from (master, tag, grid index, run index). Adding grid
/// points or runs never changes the seeds of existing ones.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t grid_index,
                          std::uint64_t run_index) noexcept;

}  // namespace lcat
