#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ghsim {

namespace detail {

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x00000100000001b3ull;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace detail

/// A labeled random stream derived from the scenario seed.
///
/// Every module concern ("radio-loss", "sensor-noise", ...) draws from its own
/// stream, so adding draws in one concern never perturbs another. The same
/// (seed, label) pair always replays the same sequence.
class RngStream {
 public:
  RngStream() : RngStream(0, "default") {}
  RngStream(std::uint64_t seed, std::string_view label)
      : engine_(derive_seed(seed, label)) {}

  static std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
    return detail::splitmix64(detail::splitmix64(seed) ^ detail::fnv1a64(label));
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return std::generate_canonical<double, 53>(engine_); }

  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return uniform() < p;
  }

  double gaussian(double mean, double sigma) {
    if (sigma <= 0.0) return mean;
    return mean + sigma * normal_(engine_);
  }

  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace ghsim
