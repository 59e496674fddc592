#pragma once

#include <array>
#include <cstdint>
#include <optional>

namespace crashforge {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// xoshiro256** stream with a one-slot Box-Muller cache.
///
/// A stream is single-owner. Parallel work derives one stream per index with
/// derive_stream() instead of sharing.
class RngStream {
 public:
  using State = std::array<std::uint64_t, 4>;

  /// Replacement state used when seeding would produce all zeros.
  static constexpr State kNonZeroFallback = {0x8764000BULL, 0xF542D2D3ULL, 0x6FA035C3ULL,
                                             0x77F2DB5BULL};

  explicit RngStream(const State& state);

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();

  /// Uniform on (0, 1]; safe to pass to log().
  double uniform_open_low();

  /// Standard normal via Box-Muller. Each pair of uniforms yields two
  /// normals: the first is returned, the second is cached for the next call.
  double standard_normal();

  /// Uniform integer in [0, bound). bound must be nonzero.
  std::uint64_t bounded(std::uint64_t bound);

  const State& state() const { return state_; }
  bool has_cached_normal() const { return cached_normal_.has_value(); }

  friend bool operator==(const RngStream&, const RngStream&) = default;

 private:
  State state_;
  std::optional<double> cached_normal_;
};

/// SplitMix64 seeded with master_seed ^ (episode_index * 0x9E3779B97F4A7C15);
/// its first four outputs become the xoshiro256** state.
RngStream derive_stream(std::uint64_t master_seed, std::uint64_t episode_index);

/// Stable 64-bit mixing of two words, used for identifiers and sub-seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace crashforge
