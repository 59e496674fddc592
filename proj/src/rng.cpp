#include "crashforge/rng.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace crashforge {

RngStream::RngStream(const State& state) : state_(state) {
  if (state_ == State{0, 0, 0, 0}) state_ = kNonZeroFallback;
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = std::rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = std::rotl(state_[3], 45);
  return result;
}

double RngStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RngStream::uniform_open_low() {
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double RngStream::standard_normal() {
  if (cached_normal_) {
    const double z = *cached_normal_;
    cached_normal_.reset();
    return z;
  }
  const double u1 = uniform_open_low();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  return radius * std::cos(angle);
}

std::uint64_t RngStream::bounded(std::uint64_t bound) {
  // Rejection on the top of the range keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound + 1) % bound;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x > limit);
  return x % bound;
}

RngStream derive_stream(std::uint64_t master_seed, std::uint64_t episode_index) {
  SplitMix64 seeder(master_seed ^ (episode_index * 0x9E3779B97F4A7C15ULL));
  RngStream::State s;
  for (auto& word : s) word = seeder.next();
  return RngStream(s);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  SplitMix64 m(a ^ std::rotl(b, 32) ^ 0xD1B54A32D192ED03ULL);
  m.next();
  return m.next();
}

}  // namespace crashforge
