#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace srouda {

/// Deterministic random stream, independent of platform and standard
/// library internals. A stream is identified by (seed, stream name);
/// the same (seed, stream, draw index) always yields the same value.
/// Substreams are derived from the base identity, not from consumed
/// state, so drawing from one stream never perturbs another.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::string_view stream = "root");

  std::uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal();                       // standard normal, Box-Muller
  bool bernoulli(double p);
  std::size_t uniform_index(std::size_t n);  // {0, ..., n-1}, unbiased

  /// Identity permutation of {0..n-1} shuffled by Fisher-Yates.
  std::vector<std::size_t> permutation(std::size_t n);

  /// First m entries of a random permutation of {0..n-1} (m <= n),
  /// i.e. a uniform sample without replacement.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m);

  Rng substream(std::string_view name) const;

  std::uint64_t seed() const { return seed_; }
  const std::string& stream() const { return stream_; }

 private:
  std::uint64_t seed_ = 0;
  std::string stream_;
  std::uint64_t state_[4] = {0, 0, 0, 0};  // xoshiro256**
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace srouda
